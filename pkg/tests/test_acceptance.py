"""The eight acceptance criteria, each at its stated tolerance.

Every test records a one-line PASS/FAIL verdict that is printed in the
terminal summary (and immediately, when run with ``-s``).
"""
import time

import numpy as np
import pytest

from conftest import ACCEPTANCE, load_fixture, random_network, random_voltages, sdp_fixture_names
from hfopf.cli import main as cli_main
from hfopf.formulation import ConicProblem, lift_branch, lift_bus, real_voltage
from hfopf.health import HealthProfile, MappingMode, network_limits, table_defaults
from hfopf.network import branch_flow, build_admittance, complex_injection
from hfopf.oracle import OracleSettings, oracle_dispatch
from hfopf.recovery import DispatchStatus, run_opf
from hfopf.solver import Status, check_certificate, solve
from hfopf.sweep import DerateMode, SweepSpec, default_hci_grid, run_sweep

pytestmark = pytest.mark.slow

TARGET = "G2"
SOLVED = ("EXACT", "INEXACT")
# two solves of nearly identical problems agree to about the solver gap tolerance
MODE_SLACK = 1e-9


def record(k, title, ok, detail):
    ACCEPTANCE[k] = (title, bool(ok), detail)
    print(f"criterion {k} [{title}]: {'PASS' if ok else 'FAIL'} - {detail}")
    assert ok, detail


def rel_change(row):
    """Relative cost change, with an infeasible point counted as +inf."""
    return np.inf if row.status == "INFEASIBLE" else row.relative_cost_change


# ---------------------------------------------------------------------------

GENERATOR = [
    ("Healthy", 0, 0, 0, 1, 1), ("Magnet fault", 0.5, 0.06, 0.075, 0.96, 0.99),
    ("Static eccentricity", 0.8, 0.08, 0.11, 0.94, 0.96), ("Dynamic eccentricity", 0.9, 0.08, 0.12, 0.93, 0.95),
    ("Mixed eccentricity", 0.91, 0.07, 0.135, 0.92, 0.92), ("Turn-turn short-circuit", 1, 0.1, 0.15, 0.86, 0.9),
    ("Phase-Ground", 3, 0.49, 0.469, 0.79, 0.79), ("Open-Phase", 4, 0.59, 0.527, 0.76, 0.76),
    ("Phase-Phase", 5, 0.69, 0.587, 0.65, 0.65), ("Three-phase open", 7, 0.75, 0.827, 0.51, 0.51),
    ("Bolted short-circuited", 10, 0.89, 0.934, 0, 0),
]
BATTERY = [
    ("Healthy", 0, 0, 0, 0.9, 0.9), ("External short circuit", 0.5, 0.26, 0.31, 0.81, 0.81),
    ("Internal short circuit", 0.9, 0.91, 0.92, 0.53, 0.53), ("Thermal runaway", 1, 0.96, 0.98, 0, 0),
]


def test_1_table_fidelity():
    gen, bat = table_defaults()
    rows = lambda t: [(r.fault_case, r.severity_rul, r.p_range, r.v_range, r.hci_lo, r.hci_hi) for r in t]
    ttsc = gen.row("Turn-turn short-circuit")
    ok = (rows(gen) == GENERATOR and rows(bat) == BATTERY
          and (ttsc.hci_hi, ttsc.hci_lo, ttsc.p_range) == (0.9, 0.86, 0.1)
          and bat.row("Thermal runaway").p_range == 0.96 and bat.row("Thermal runaway").hci_hi == 0)
    record(1, "table fidelity", ok, f"{len(gen)} generator + {len(bat)} battery rows, exact match")


# ---------------------------------------------------------------------------

def lifting_error(net, V):
    Y = build_admittance(net)
    v = real_voltage(V)
    S = complex_injection(net, V)
    pairs = []
    for k in range(net.n_bus):
        L = lift_bus(Y, k)
        pairs += [(v @ L.Yk @ v, S[k].real), (v @ L.Ybar_k @ v, S[k].imag), (v @ L.Mk @ v, abs(V[k]) ** 2)]
    for br in net.branches:
        for rev in (False, True):
            k, l = (br.to_bus, br.from_bus) if rev else (br.from_bus, br.to_bus)
            F = lift_branch(br.series_admittance, k, l, net.n_bus)
            s = branch_flow(br, V, rev)
            pairs += [(v @ F.Ykl @ v, s.real), (v @ F.Ybar_kl @ v, s.imag)]
    return max(abs(a - b) / max(1.0, abs(b)) for a, b in pairs)


def test_2_lifting(net3):
    rng = np.random.default_rng(2024)
    t0 = time.perf_counter()
    e_mg3 = max(lifting_error(net3, V) for V in random_voltages(rng, 3, 100))
    e_rand = max(lifting_error(random_network(rng, 4, int(rng.integers(0, 3))), random_voltages(rng, 4))
                 for _ in range(100))
    dt = time.perf_counter() - t0
    record(2, "lifting", max(e_mg3, e_rand) <= 1e-10 and dt < 1.0,
           f"max rel. error mg3 {e_mg3:.1e}, random 4-bus {e_rand:.1e} (tol 1e-10), {dt:.2f} s")


# ---------------------------------------------------------------------------

def test_3_soundness(net3):
    t0 = time.perf_counter()
    osettings = OracleSettings(9, 9, 5)
    bad, compared, both_infeasible = [], 0, 0
    for mapping in MappingMode:
        for dv in (False, True):
            for h in default_hci_grid():
                prof = {TARGET: HealthProfile(TARGET, h, mapping_mode=mapping)}
                res = run_opf(net3, prof, derate_voltage=dv)
                orc = oracle_dispatch(net3, network_limits(net3, prof, dv), osettings)
                tag = f"{mapping.value}/{'P_AND_V' if dv else 'P_ONLY'}/h={h}"
                if res.status in (DispatchStatus.EXACT, DispatchStatus.INEXACT):
                    if orc.best_cost is not None:
                        compared += 1
                        if res.objective > orc.best_cost + 1e-6:
                            bad.append(f"{tag}: sdp {res.objective:.6f} > oracle {orc.best_cost:.6f}")
                elif res.status is DispatchStatus.INFEASIBLE:
                    both_infeasible += orc.feasible_count == 0
                    if orc.feasible_count:
                        bad.append(f"{tag}: SDP infeasible but oracle has {orc.feasible_count} points")
                else:
                    bad.append(f"{tag}: solver failed ({res.message})")
    dt = time.perf_counter() - t0
    record(3, "relaxation soundness", not bad and dt <= 300,
           f"{compared} points compared, {both_infeasible} jointly infeasible, {len(bad)} violations, "
           f"{dt:.1f} s" + (f"; first: {bad[0]}" if bad else ""))


# ---------------------------------------------------------------------------

def test_4_exactness(net3):
    res = run_opf(net3)
    orc = oracle_dispatch(net3, network_limits(net3), OracleSettings(9, 9, 5))
    worst = min(res.limit_margins.values()) if res.limit_margins else -np.inf
    gap = orc.best_cost - res.objective
    ok = (res.status is DispatchStatus.EXACT and res.exactness_ratio < 1e-5
          and res.balance_residual < 1e-6 and worst >= -1e-6 and 0 <= gap + 1e-6 and gap <= orc.cell_bound)
    record(4, "exactness and feasibility", ok,
           f"lambda2/lambda1 {res.exactness_ratio:.1e}, balance {res.balance_residual:.1e}, "
           f"worst margin {worst:.1e}, oracle - sdp {gap:.3f} <= cell bound {orc.cell_bound:.3f}")


# ---------------------------------------------------------------------------

@pytest.fixture(scope="module")
def health_sweeps(net3):
    """Default HCI grid, both derating modes, per mapping."""
    return {m: run_sweep(net3, SweepSpec(TARGET, default_hci_grid(), tuple(DerateMode), (1.0,), m), workers=4)
            for m in MappingMode}


def test_5_health_sweep(net3, health_sweeps):
    problems, thresholds = [], {}
    for mapping, rows in health_sweeps.items():
        by_mode = {m.value: [r for r in rows if r.mode == m.value] for m in DerateMode}
        for mode, sel in by_mode.items():
            if sel[0].hci != 1.0 or sel[0].relative_cost_change != 0.0:
                problems.append(f"{mapping.value}/{mode}: change at h=1 is {sel[0].relative_cost_change}")
            vals = [rel_change(r) for r in sel]
            if any(b < a for a, b in zip(vals, vals[1:])):
                problems.append(f"{mapping.value}/{mode}: not nondecreasing as h falls: {vals}")
        for p, v in zip(by_mode["P_ONLY"], by_mode["P_AND_V"]):
            if rel_change(v) < rel_change(p) - MODE_SLACK:
                problems.append(f"{mapping.value} h={p.hci}: P_AND_V {rel_change(v)} < P_ONLY {rel_change(p)}")

        # the infeasibility threshold under P_AND_V, following the grid down to h = 0
        hs = default_hci_grid(1.0, 0.0, 0.05)
        results = [run_opf(net3, {TARGET: HealthProfile(TARGET, h, mapping_mode=mapping)}, derate_voltage=True)
                   for h in hs]
        infeasible = [r.status is DispatchStatus.INFEASIBLE for r in results]
        if not any(infeasible):
            problems.append(f"{mapping.value}: no infeasible point under P_AND_V")
            continue
        first = infeasible.index(True)
        if not all(infeasible[first:]):
            problems.append(f"{mapping.value}: feasible again below the threshold")
        if not all(r.certificate_ok for r in results[first:]):
            problems.append(f"{mapping.value}: an infeasibility certificate failed its check")
        thresholds[mapping.value] = (hs[first - 1], hs[first])
    summary = ", ".join(f"{m}: feasible at h={a}, infeasible from h={b}" for m, (a, b) in thresholds.items())
    record(5, "health sweep trends", not problems,
           ("; ".join(problems) if problems else "zero at h=1, nondecreasing, P_AND_V >= P_ONLY") + "; " + summary)


def test_6_load_scaling(net3, health_sweeps):
    problems = []
    sfs = (1.0, 1.1, 1.2)
    for mapping in MappingMode:
        rows = run_sweep(net3, SweepSpec(TARGET, default_hci_grid(), (DerateMode.P_ONLY,), sfs, mapping), workers=4)
        by_sf = {sf: [r for r in rows if r.sf == sf] for sf in sfs}
        for i, h in enumerate(default_hci_grid()):
            if h == 1.0:
                continue
            vals = [rel_change(by_sf[sf][i]) for sf in sfs]
            if any(b < a for a, b in zip(vals, vals[1:])):
                problems.append(f"{mapping.value} h={h}: {vals} not nondecreasing in SF")
        ref = [r for r in health_sweeps[mapping] if r.mode == "P_ONLY"]
        if [r.relative_cost_change for r in by_sf[1.0]] != [r.relative_cost_change for r in ref]:
            problems.append(f"{mapping.value}: SF=1.0 differs from the P_ONLY health sweep")
    record(6, "load scaling", not problems,
           "; ".join(problems) if problems else
           "nondecreasing in SF at every h < 1 (linear and table); SF=1.0 equals the P_ONLY curve")


# ---------------------------------------------------------------------------

def test_7_solver_quality():
    worst_err, worst_gap, problems = 0.0, 0.0, []
    feasible = sdp_fixture_names("feasible")
    for name in feasible:
        doc = load_fixture(name)
        sol = solve(ConicProblem.from_json(doc))
        opt = doc["expected"]["objective"]
        if sol.status is not Status.OPTIMAL:
            problems.append(f"{name}: {sol.status.value}")
            continue
        err = abs(sol.objective_primal - opt) / max(1.0, abs(opt))
        worst_err, worst_gap = max(worst_err, err), max(worst_gap, sol.residuals["gap"])
    infeasible = sdp_fixture_names("infeasible")
    for name in infeasible:
        prob = ConicProblem.from_json(load_fixture(name))
        sol = solve(prob)
        if sol.status is not Status.PRIMAL_INFEASIBLE or not check_certificate(prob, sol).ok:
            problems.append(f"{name}: {sol.status.value}")
    ok = len(feasible) == 20 and len(infeasible) >= 1 and not problems and worst_err <= 1e-7 and worst_gap <= 1e-8
    record(7, "solver quality", ok,
           f"{len(feasible)} feasible fixtures: max rel. error {worst_err:.1e}, max gap {worst_gap:.1e}; "
           f"{len(infeasible)} infeasible fixtures certified" + (f"; {problems}" if problems else ""))


# ---------------------------------------------------------------------------

def test_8_determinism(tmp_path, capsys):
    outputs = []
    for run in range(2):
        files = []
        for mapping in ("linear", "table"):
            path = tmp_path / f"run{run}_{mapping}.csv"
            code = cli_main(["sweep", "--mode", mapping, "--modes", "P_ONLY,P_AND_V", "--sf", "1.0,1.1,1.2",
                             "--workers", "4", "--out", str(path)])
            assert code == 0
            files.append(path.read_bytes())
        outputs.append(b"".join(files))
    capsys.readouterr()
    same = outputs[0] == outputs[1]
    n_rows = outputs[0].count(b"\n") - 4      # minus schema and header lines of both files
    record(8, "determinism", same, f"two full sweeps ({n_rows} rows) byte-identical: {same}")
