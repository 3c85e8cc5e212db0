"""Generate the frozen block-SDP fixtures used by the solver tests.

Feasible fixtures are built from a complementary primal-dual pair
(X*, y*, S*) with <X*, S*> = 0, so the optimum <C, X*> = b'y* is known in
closed form. When cvxpy is importable each fixture is also solved once by an
external conic solver and that value is stored alongside for reference.
Infeasible fixtures carry a Farkas direction by construction.

Run from the repository root:  python3 scripts/make_sdp_fixtures.py
"""
from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from hfopf.formulation import ConicProblem

OUT = Path(__file__).resolve().parents[1] / "tests" / "fixtures" / "sdp"
N_FEASIBLE = 20
SEED = 20240611


def _rand_sym(rng, d):
    M = rng.standard_normal((d, d))
    return (M + M.T) / 2


def _complementary_pair(rng, d):
    Q, _ = np.linalg.qr(rng.standard_normal((d, d)))
    r = int(rng.integers(0, d + 1)) if d == 1 else int(rng.integers(1, d))
    x = np.r_[rng.uniform(0.5, 2.0, r), np.zeros(d - r)]
    s = np.r_[np.zeros(r), rng.uniform(0.5, 2.0, d - r)]
    return (Q * x) @ Q.T, (Q * s) @ Q.T


def feasible_problem(rng):
    dims = [int(d) for d in rng.choice([1, 2, 3, 4, 5], size=int(rng.integers(2, 6)))]
    m = int(rng.integers(2, max(3, sum(d * (d + 1) // 2 for d in dims) // 2) + 1))
    pairs = [_complementary_pair(rng, d) for d in dims]
    A = [np.stack([_rand_sym(rng, d) for _ in range(m)]) for d in dims]
    y = rng.standard_normal(m)
    b = sum(np.einsum("mij,ij->m", Ab, X) for Ab, (X, _) in zip(A, pairs))
    C = [np.einsum("m,mij->ij", y, Ab) + S for Ab, (_, S) in zip(A, pairs)]
    prob = ConicProblem(dims, [(c + c.T) / 2 for c in C], A, b, [f"r{i}" for i in range(m)])
    return prob, float(b @ y)


def infeasible_problem(rng, kind):
    if kind == "duplicate":
        # X00 = 1 and X00 = 2 in one 2x2 block
        A = np.zeros((2, 2, 2))
        A[:, 0, 0] = 1.0
        return ConicProblem([2], [np.eye(2)], [A], [1.0, 2.0], ["x00=1", "x00=2"])
    if kind == "negative_trace":
        d = 3
        A = np.eye(d)[None]
        return ConicProblem([d], [np.eye(d)], [A], [-1.0], ["trace=-1"])
    # random data with sum y_i A_i negative definite and b'y = 1
    dims = [3, 2, 1]
    m = 4
    y = rng.standard_normal(m)
    y[-1] = 1.0 if abs(y[-1]) < 0.5 else y[-1]
    A = [np.stack([_rand_sym(rng, d) for _ in range(m)]) for d in dims]
    for Ab, d in zip(A, dims):
        rest = np.einsum("m,mij->ij", y[:-1], Ab[:-1])
        M = rng.standard_normal((d, d))
        P = M @ M.T + np.eye(d)
        last = (-P - rest) / y[-1]
        Ab[-1] = (last + last.T) / 2
    b = rng.standard_normal(m)
    b += (1.0 - b @ y) * y / (y @ y)
    C = [_rand_sym(rng, d) for d in dims]
    return ConicProblem(dims, C, A, b, [f"r{i}" for i in range(m)])


def external_optimum(prob):
    try:
        import cvxpy as cp
    except ImportError:
        return None, None
    X = [cp.Variable((d, d), symmetric=True) for d in prob.block_dims]
    cons = [x >> 0 for x in X]
    for i in range(prob.m):
        cons.append(sum(cp.trace(Ab[i] @ x) for Ab, x in zip(prob.A, X)) == prob.b[i])
    obj = cp.Minimize(sum(cp.trace(C @ x) for C, x in zip(prob.objective, X)))
    p = cp.Problem(obj, cons)
    solver = "CLARABEL" if "CLARABEL" in cp.installed_solvers() else "SCS"
    kw = {"tol_gap_abs": 1e-10, "tol_gap_rel": 1e-10, "tol_feas": 1e-10} if solver == "CLARABEL" else {"eps": 1e-10}
    p.solve(solver=solver, **kw)
    value = float(p.value) if p.status in ("optimal", "optimal_inaccurate") else None
    return value, f"cvxpy {cp.__version__} / {solver} ({p.status})"


def main():
    rng = np.random.default_rng(SEED)
    OUT.mkdir(parents=True, exist_ok=True)
    for k in range(N_FEASIBLE):
        prob, opt = feasible_problem(rng)
        ext, who = external_optimum(prob)
        doc = prob.to_json()
        doc["expected"] = {"status": "OPTIMAL", "objective": opt,
                           "external_objective": ext, "external_solver": who}
        (OUT / f"feasible_{k:02d}.json").write_text(json.dumps(doc, indent=1) + "\n")
        print(f"feasible_{k:02d}: dims={prob.block_dims} m={prob.m} analytic={opt:.10f} external={ext}")
    for kind in ("duplicate", "negative_trace", "random_a", "random_b"):
        prob = infeasible_problem(rng, kind)
        doc = prob.to_json()
        doc["expected"] = {"status": "PRIMAL_INFEASIBLE"}
        (OUT / f"infeasible_{kind}.json").write_text(json.dumps(doc, indent=1) + "\n")
        print(f"infeasible_{kind}: dims={prob.block_dims} m={prob.m}")


if __name__ == "__main__":
    main()
