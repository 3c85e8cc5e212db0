"""Command-line front end: ``hfopf solve|sweep|battery-sweep|validate|dump-problem``."""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .formulation import assemble
from .health import HealthProfile, MappingMode, load_fault_tables, network_limits
from .network import CaseError, CaseParseError, load_case, resolve_case_path
from .oracle import OracleGuardError, OracleSettings, oracle_dispatch
from .recovery import DispatchResult, DispatchStatus, run_opf
from .solver import SolverSettings
from .sweep import DerateMode, SweepSpec, battery_spec, rows_to_csv, run_sweep

# solve outcomes
EXIT_EXACT, EXIT_INFEASIBLE, EXIT_INEXACT, EXIT_FAILED = 0, 2, 3, 4
# validate verdict
EXIT_DISAGREE = 5
# usage / IO (sysexits.h)
EXIT_USAGE, EXIT_DATAERR, EXIT_NOINPUT, EXIT_UNAVAILABLE, EXIT_CANTCREAT = 64, 65, 66, 69, 73

STATUS_EXIT = {
    DispatchStatus.EXACT: EXIT_EXACT,
    DispatchStatus.INFEASIBLE: EXIT_INFEASIBLE,
    DispatchStatus.INEXACT: EXIT_INEXACT,
    DispatchStatus.FAILED: EXIT_FAILED,
}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on bad usage, which would collide with INFEASIBLE
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def _float_list(text):
    try:
        return [float(t) for t in text.replace(",", " ").split()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a comma-separated list of numbers, got {text!r}")


def _assignment(text):
    ref, sep, val = text.partition("=")
    if not sep or not ref:
        raise argparse.ArgumentTypeError(f"expected ID=VALUE, got {text!r}")
    try:
        return ref.strip(), float(val)
    except ValueError:
        raise argparse.ArgumentTypeError(f"health value in {text!r} is not a number")


def _modes(text):
    out = []
    for tok in text.replace(",", " ").split():
        key = tok.upper().replace("-", "_")
        if key not in DerateMode.__members__:
            raise argparse.ArgumentTypeError(f"unknown derating mode {tok!r} (use P_ONLY, P_AND_V)")
        out.append(DerateMode[key])
    return out


def _common(p, solver=True):
    p.add_argument("case_path", nargs="?", help="case file (defaults to the bundled mg3.json)")
    p.add_argument("--case", dest="case_opt", metavar="PATH", help="case file")
    p.add_argument("--hci", action="append", type=_assignment, default=[], metavar="ID=VALUE",
                   help="health index for one unit, e.g. G2=0.65 (repeatable)")
    p.add_argument("--mode", choices=[m.value for m in MappingMode], default="linear",
                   help="health-to-limit mapping")
    p.add_argument("--table", metavar="PATH", help="fault table JSON (default: $HFOPF_TABLE_PATH)")
    p.add_argument("--verbose", action="store_true", help="solver iteration log on stderr")
    if solver:
        p.add_argument("--tol-gap", type=float, default=1e-8)
        p.add_argument("--rank1-tol", type=float, default=1e-5)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="hfopf", description="Health-aware optimal power flow via SDP relaxation.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("solve", help="solve one case")
    _common(p)
    p.add_argument("--derate-voltage", action="store_true", help="also derate the voltage band")
    p.add_argument("--sf", type=float, default=1.0, help="load scaling factor")
    p.add_argument("--json", action="store_true", help="JSON output")

    for name, helptext in (("sweep", "health/loading sweep of one unit"),
                           ("battery-sweep", "health sweep of a storage unit")):
        p = sub.add_parser(name, help=helptext)
        _common(p)
        p.add_argument("--target", help="unit to sweep" + (" (default G2)" if name == "sweep" else ""))
        p.add_argument("--hci-values", type=_float_list, help="strictly decreasing HCI list")
        p.add_argument("--modes", type=_modes, help="P_ONLY and/or P_AND_V")
        p.add_argument("--sf", type=_float_list, default=[1.0], help="load scaling factors")
        p.add_argument("--out", metavar="CSV_PATH", help="write CSV here instead of stdout")
        p.add_argument("--workers", type=int, default=1)

    p = sub.add_parser("validate", help="cross-check the SDP against the brute-force oracle")
    _common(p)
    p.add_argument("--derate-voltage", action="store_true")
    p.add_argument("--sf", type=float, default=1.0)
    p.add_argument("--p-steps", type=int, default=9)
    p.add_argument("--q-steps", type=int, default=9)
    p.add_argument("--v-steps", type=int, default=5)
    p.add_argument("--json", action="store_true")

    p = sub.add_parser("dump-problem", help="write the assembled conic problem as JSON")
    _common(p, solver=False)
    p.add_argument("--derate-voltage", action="store_true")
    p.add_argument("--sf", type=float, default=1.0)
    p.add_argument("--out", metavar="PATH")
    return parser


# ---------------------------------------------------------------------------

def _load(args):
    if args.case_path and args.case_opt and args.case_path != args.case_opt:
        raise UsageError("give the case either positionally or with --case, not both")
    path = resolve_case_path(args.case_opt or args.case_path or "mg3.json")
    return load_case(path)


def _profiles(args, network):
    refs = {ref for ref, _ in network.sources()}
    out = {}
    for ref, val in args.hci:
        if ref not in refs:
            raise UsageError(f"--hci: unknown unit {ref!r} (known: {', '.join(sorted(refs))})")
        if not 0 <= val <= 1:
            raise UsageError(f"--hci {ref}={val}: health index must lie in [0, 1]")
        out[ref] = HealthProfile(ref, val, mapping_mode=args.mode)
    return out


def _settings(args):
    if args.tol_gap <= 0 or args.rank1_tol <= 0:
        raise UsageError("tolerances must be positive")
    return SolverSettings(tol_gap=args.tol_gap, verbose=args.verbose)


def _result_dict(network, res: DispatchResult) -> dict:
    base = network.base_mva

    def mw(d):
        return {k: float(v) * base for k, v in d.items()}
    out = {
        "status": res.status.value,
        "cost_total": res.cost_total,
        "objective": res.objective,
        "exactness_ratio": res.exactness_ratio,
        "balance_residual": res.balance_residual,
        "p_gen_mw": mw(res.p_gen),
        "q_gen_mvar": mw(res.q_gen),
        "bess_power_mw": mw(res.bess_power),
        "load_scale": res.load_scale,
        "solver_status": res.solver_status,
        "iterations": res.iterations,
        "certificate_ok": res.certificate_ok,
        "limit_margins": res.limit_margins,
        "message": res.message,
    }
    if res.voltages is not None:
        out["voltages"] = [{"bus": k + 1, "magnitude": float(abs(v)), "angle_deg": float(np.degrees(np.angle(v)))}
                           for k, v in enumerate(res.voltages)]
    return out


def _print_result(network, res: DispatchResult):
    d = _result_dict(network, res)
    print(f"status: {d['status']}  (solver {d['solver_status']}, {d['iterations']} iterations)")
    if d["cost_total"] is not None:
        label = "cost (lower bound)" if res.status is DispatchStatus.INEXACT else "cost"
        print(f"{label}: {d['cost_total']:.6f}")
        print(f"exactness lambda2/lambda1: {d['exactness_ratio']:.3e}")
    for ref, mw in {**d["p_gen_mw"], **d["bess_power_mw"]}.items():
        print(f"  {ref}: P = {mw:9.4f} MW   Q = {d['q_gen_mvar'][ref]:9.4f} MVAr")
    for v in d.get("voltages", []):
        print(f"  bus {v['bus']}: |V| = {v['magnitude']:.6f} pu  angle = {v['angle_deg']:8.4f} deg")
    if d["balance_residual"] is not None:
        print(f"power balance residual: {d['balance_residual']:.3e} pu")
    if res.certificate_ok is not None:
        print(f"infeasibility certificate verified: {res.certificate_ok}")
    if d["message"]:
        print(d["message"])


def cmd_solve(args) -> int:
    network = _load(args)
    tables = load_fault_tables(args.table)
    res = run_opf(network, _profiles(args, network), derate_voltage=args.derate_voltage,
                  load_scale=args.sf, tables=tables, settings=_settings(args), rank1_tol=args.rank1_tol)
    if args.json:
        print(json.dumps(_result_dict(network, res), indent=2))
    else:
        _print_result(network, res)
    return STATUS_EXIT[res.status]


def _write_text(path, text):
    if path is None:
        sys.stdout.write(text)
        return
    try:
        Path(path).write_text(text, encoding="utf-8")
    except OSError as exc:
        raise _CantCreate(f"cannot write {path}: {exc}") from exc


class _CantCreate(Exception):
    pass


def _sweep(args, battery: bool) -> int:
    network = _load(args)
    profiles = _profiles(args, network)
    if args.workers < 1:
        raise UsageError("--workers must be >= 1")
    kwargs = {"load_scales": tuple(args.sf), "mapping_mode": args.mode}
    if args.hci_values is not None:
        kwargs["hci_values"] = tuple(args.hci_values)
    if args.modes is not None:
        kwargs["modes"] = tuple(args.modes)
    try:
        if battery:
            spec = battery_spec(network, args.target, **kwargs)
        else:
            spec = SweepSpec(args.target or "G2", **kwargs)
            network.source(spec.target)
    except (ValueError, KeyError) as exc:
        raise UsageError(str(exc).strip("'\""))
    rows = run_sweep(network, spec, base_profiles=profiles, settings=_settings(args),
                     rank1_tol=args.rank1_tol, workers=args.workers,
                     tables=load_fault_tables(args.table))
    _write_text(args.out, rows_to_csv(rows))
    return 0


def cmd_validate(args) -> int:
    network = _load(args)
    profiles = _profiles(args, network)
    tables = load_fault_tables(args.table)
    try:
        osettings = OracleSettings(args.p_steps, args.q_steps, args.v_steps)
    except ValueError as exc:
        raise UsageError(str(exc))
    limits = network_limits(network, profiles, args.derate_voltage, tables)
    res = run_opf(network, profiles, derate_voltage=args.derate_voltage, load_scale=args.sf,
                  tables=tables, settings=_settings(args), rank1_tol=args.rank1_tol)
    orc = oracle_dispatch(network, limits, osettings, args.sf)
    sdp = res.objective if res.status in (DispatchStatus.EXACT, DispatchStatus.INEXACT) else None
    report = {"sdp_status": res.status.value, "sdp_cost": sdp, "oracle_cost": orc.best_cost,
              "oracle_feasible_count": orc.feasible_count, "oracle_grid_size": orc.grid_size,
              "cell_bound": orc.cell_bound, "gap": None, "bound_only": res.status is DispatchStatus.INEXACT}
    if sdp is not None and orc.best_cost is not None:
        report["gap"] = orc.best_cost - sdp
        sound = sdp <= orc.best_cost + 1e-6
        if res.status is DispatchStatus.EXACT:
            agree = sound and report["gap"] <= orc.cell_bound + 1e-6
            verdict = "agree" if agree else "disagree"
        else:
            verdict = "bound-only: SDP lower-bounds the oracle" if sound else "disagree"
    elif sdp is None and orc.best_cost is None:
        verdict = "agree: both infeasible" if res.status is DispatchStatus.INFEASIBLE else "disagree"
    elif sdp is None:
        verdict = "disagree: oracle found a feasible point"
    else:
        verdict = "inconclusive: no feasible grid point (grid may be too coarse)"
    report["verdict"] = verdict
    if args.json:
        print(json.dumps(report, indent=2))
    else:
        for k, v in report.items():
            print(f"{k}: {v}")
    return EXIT_DISAGREE if verdict.startswith("disagree") else 0


def cmd_dump(args) -> int:
    network = _load(args)
    limits = network_limits(network, _profiles(args, network), args.derate_voltage,
                            load_fault_tables(args.table))
    _write_text(args.out, assemble(network, limits, args.sf).dumps() + "\n")
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:      # --help, --version and usage errors
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE
    handlers = {"solve": cmd_solve, "sweep": lambda a: _sweep(a, False),
                "battery-sweep": lambda a: _sweep(a, True), "validate": cmd_validate,
                "dump-problem": cmd_dump}
    try:
        return handlers[args.command](args)
    except UsageError as exc:
        print(f"hfopf: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except FileNotFoundError as exc:
        print(f"hfopf: error: {exc}", file=sys.stderr)
        return EXIT_NOINPUT
    except (CaseError, CaseParseError, json.JSONDecodeError) as exc:
        print(f"hfopf: error: {exc}", file=sys.stderr)
        return EXIT_DATAERR
    except OracleGuardError as exc:
        print(f"hfopf: refusing to validate: {exc}", file=sys.stderr)
        return EXIT_UNAVAILABLE
    except _CantCreate as exc:
        print(f"hfopf: error: {exc}", file=sys.stderr)
        return EXIT_CANTCREAT
    except ValueError as exc:       # bad fault table and similar input data
        print(f"hfopf: error: {exc}", file=sys.stderr)
        return EXIT_DATAERR


if __name__ == "__main__":
    sys.exit(main())
