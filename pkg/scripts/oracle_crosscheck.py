"""Cross-check the SDP against the brute-force power-flow oracle over a health sweep.

For every (mapping, derating mode, hci) point, prints SDP status and cost,
the oracle's best grid cost, its feasible-point count and cell bound, and
flags any point where the SDP exceeds the oracle (a soundness violation).

    python3 scripts/oracle_crosscheck.py
"""
from __future__ import annotations

import argparse
import time
from dataclasses import dataclass

from hfopf.health import HealthProfile, MappingMode, network_limits
from hfopf.network import load_case, resolve_case_path
from hfopf.oracle import OracleSettings, oracle_dispatch
from hfopf.recovery import DispatchStatus, run_opf
from hfopf.sweep import default_hci_grid


@dataclass(frozen=True)
class Config:
    case: str = "mg3.json"
    target: str = "G2"
    p_steps: int = 9
    q_steps: int = 9
    v_steps: int = 5
    slack: float = 1e-6


def main(cfg: Config) -> int:
    network = load_case(resolve_case_path(cfg.case))
    osettings = OracleSettings(cfg.p_steps, cfg.q_steps, cfg.v_steps)
    t0 = time.perf_counter()
    bad = 0
    print(f"{'mapping':7} {'mode':7} {'hci':>5} {'sdp':>10} {'sdp cost':>12} {'oracle':>12} "
          f"{'feasible':>8} {'cell':>8}")
    for mapping in MappingMode:
        for dv in (False, True):
            for h in default_hci_grid():
                prof = {cfg.target: HealthProfile(cfg.target, h, mapping_mode=mapping)}
                res = run_opf(network, prof, derate_voltage=dv)
                orc = oracle_dispatch(network, network_limits(network, prof, dv), osettings)
                sdp = res.objective if res.status in (DispatchStatus.EXACT, DispatchStatus.INEXACT) else None
                flag = ""
                if sdp is not None and orc.best_cost is not None and sdp > orc.best_cost + cfg.slack:
                    flag = "  VIOLATION"
                if sdp is None and orc.feasible_count > 0:
                    flag = "  VIOLATION (oracle feasible)"
                bad += bool(flag)
                mode = "P_AND_V" if dv else "P_ONLY"
                print(f"{mapping.value:7} {mode:7} {h:5.2f} {res.status.value:>10} "
                      f"{'' if sdp is None else f'{sdp:12.4f}':>12} "
                      f"{'' if orc.best_cost is None else f'{orc.best_cost:12.4f}':>12} "
                      f"{orc.feasible_count:8d} {'' if orc.cell_bound is None else f'{orc.cell_bound:8.2f}':>8}{flag}")
    print(f"\n{bad} violation(s); {time.perf_counter() - t0:.1f} s")
    return 1 if bad else 0


if __name__ == "__main__":
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    for name, default in Config().__dict__.items():
        p.add_argument(f"--{name.replace('_', '-')}", type=type(default), default=default)
    raise SystemExit(main(Config(**vars(p.parse_args()))))
