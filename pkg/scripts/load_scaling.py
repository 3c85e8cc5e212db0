"""Effect of uniform load scaling on the health-dependent cost increase.

Sweeps generator health under P_ONLY derating for several load scaling
factors and prints the relative cost change per factor.

    python3 scripts/load_scaling.py --sf 1.0,1.1,1.2 --mode linear
"""
from __future__ import annotations

import argparse
from dataclasses import dataclass, field
from pathlib import Path

from hfopf.network import load_case, resolve_case_path
from hfopf.sweep import DerateMode, SweepSpec, default_hci_grid, rows_to_csv, run_sweep


@dataclass(frozen=True)
class Config:
    case: str = "mg3.json"
    target: str = "G2"
    sf: tuple[float, ...] = (1.0, 1.1, 1.2)
    mode: str = "linear"
    workers: int = 4
    out: str = "results"
    hci: tuple[float, ...] = field(default_factory=default_hci_grid)


def main(cfg: Config):
    network = load_case(resolve_case_path(cfg.case))
    spec = SweepSpec(cfg.target, cfg.hci, (DerateMode.P_ONLY,), cfg.sf, cfg.mode)
    rows = run_sweep(network, spec, workers=cfg.workers)
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    path = out / f"load_scaling_{spec.mapping_mode.value}.csv"
    path.write_text(rows_to_csv(rows), encoding="utf-8")
    print(f"{spec.mapping_mode.value} mapping, P_ONLY -> {path}")
    print("  hci    " + "".join(f"{h:8.2f}" for h in spec.hci_values))
    for sf in spec.load_scales:
        vals = [r.relative_cost_change for r in rows if r.sf == sf]
        print(f"  SF={sf:<4}" + "".join("  infeas" if v is None else f"{v:8.4f}" for v in vals))


if __name__ == "__main__":
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--case", default=Config.case)
    p.add_argument("--target", default=Config.target)
    p.add_argument("--sf", default="1.0,1.1,1.2")
    p.add_argument("--mode", choices=["linear", "table"], default=Config.mode)
    p.add_argument("--workers", type=int, default=Config.workers)
    p.add_argument("--out", default=Config.out)
    a = p.parse_args()
    main(Config(a.case, a.target, tuple(float(s) for s in a.sf.split(",")), a.mode, a.workers, a.out))
