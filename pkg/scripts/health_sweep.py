"""Relative cost change versus generator health, per mapping and derating mode.

Writes one CSV per mapping mode (LINEAR, TABLE) with both derating modes
(P_ONLY, P_AND_V) and prints a compact table of the relative cost change.

    python3 scripts/health_sweep.py --out results/
"""
from __future__ import annotations

import argparse
from dataclasses import dataclass
from pathlib import Path

from hfopf.health import MappingMode
from hfopf.network import load_case, resolve_case_path
from hfopf.sweep import DerateMode, SweepSpec, default_hci_grid, rows_to_csv, run_sweep


@dataclass(frozen=True)
class Config:
    case: str = "mg3.json"
    target: str = "G2"
    hci_start: float = 1.0
    hci_stop: float = 0.5
    hci_step: float = 0.05
    workers: int = 4
    out: str = "results"


def fmt(v):
    return "  infeas" if v is None else f"{v:8.4f}"


def main(cfg: Config):
    network = load_case(resolve_case_path(cfg.case))
    hci = default_hci_grid(cfg.hci_start, cfg.hci_stop, cfg.hci_step)
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    for mapping in MappingMode:
        spec = SweepSpec(cfg.target, hci, (DerateMode.P_ONLY, DerateMode.P_AND_V), (1.0,), mapping)
        rows = run_sweep(network, spec, workers=cfg.workers)
        path = out / f"health_sweep_{mapping.value}.csv"
        path.write_text(rows_to_csv(rows), encoding="utf-8")
        print(f"\n{mapping.value} mapping -> {path}")
        print("  hci   " + "".join(f"{h:8.2f}" for h in hci))
        for mode in spec.modes:
            sel = [r for r in rows if r.mode == mode.value]
            marks = [fmt(r.relative_cost_change) + ("*" if r.status == "INEXACT" else " ") for r in sel]
            print(f"  {mode.value:7s}" + "".join(m[:-1] if m.endswith(" ") else m for m in marks))
    print("\n* = relaxation inexact (cost is a lower bound)")


if __name__ == "__main__":
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    for name, default in Config().__dict__.items():
        p.add_argument(f"--{name.replace('_', '-')}", type=type(default), default=default)
    main(Config(**vars(p.parse_args())))
