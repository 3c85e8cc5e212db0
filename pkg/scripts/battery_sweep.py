"""Cost versus battery health, from the healthy 0.9 down to thermal runaway.

    python3 scripts/battery_sweep.py --mode table
"""
from __future__ import annotations

import argparse
from dataclasses import dataclass
from pathlib import Path

from hfopf.network import load_case, resolve_case_path
from hfopf.sweep import battery_spec, rows_to_csv, run_sweep


@dataclass(frozen=True)
class Config:
    case: str = "mg3.json"
    mode: str = "table"
    workers: int = 4
    out: str = "results"


def main(cfg: Config):
    network = load_case(resolve_case_path(cfg.case))
    spec = battery_spec(network, mapping_mode=cfg.mode)
    rows = run_sweep(network, spec, workers=cfg.workers)
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    path = out / f"battery_sweep_{spec.mapping_mode.value}.csv"
    path.write_text(rows_to_csv(rows), encoding="utf-8")
    print(f"{spec.target}, {spec.mapping_mode.value} mapping -> {path}")
    print(f"  {'hci':>5} {'status':>10} {'cost':>10} {'rel.change':>11} {'P_bess MW':>10}")
    for r in rows:
        cost = "" if r.cost_total is None else f"{r.cost_total:10.3f}"
        rel = "" if r.relative_cost_change is None else f"{r.relative_cost_change:11.5f}"
        pb = "" if r.p_bess is None else f"{r.p_bess:10.4f}"
        print(f"  {r.hci:5.2f} {r.status:>10} {cost:>10} {rel:>11} {pb:>10}")


if __name__ == "__main__":
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--case", default=Config.case)
    p.add_argument("--mode", choices=["linear", "table"], default=Config.mode)
    p.add_argument("--workers", type=int, default=Config.workers)
    p.add_argument("--out", default=Config.out)
    main(Config(**vars(p.parse_args())))
