import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import load_fixture, sdp_fixture_names
from hfopf.formulation import ConicProblem, assemble
from hfopf.health import network_limits
from hfopf.solver import ConicSolution, SolverSettings, Status, check_certificate, solve


def entry(d, i, j):
    E = np.zeros((d, d))
    E[i, j] = E[j, i] = 1.0 if i == j else 0.5
    return E


def permuted(prob, perm):
    return ConicProblem(prob.block_dims, prob.objective, [A[perm] for A in prob.A], prob.b[perm],
                        [prob.labels[i] for i in perm], prob.objective_offset, prob.block_roles,
                        prob.w_dropped)


def test_trace_with_fixed_corner():
    prob = ConicProblem([2], [np.eye(2)], [entry(2, 0, 0)[None]], [1.0], ["x11=1"])
    sol = solve(prob)
    assert sol.status is Status.OPTIMAL
    assert sol.objective_primal == pytest.approx(1.0, abs=1e-8)
    np.testing.assert_allclose(sol.primal_blocks[0], [[1, 0], [0, 0]], atol=1e-7)
    assert check_certificate(prob, sol).ok


def test_lp_as_diagonal_sdp():
    one = np.ones((1, 1))
    prob = ConicProblem([1, 1], [one, 2 * one], [one[None], one[None]], [1.0], ["sum"])
    sol = solve(prob)
    assert sol.status is Status.OPTIMAL
    assert sol.objective_primal == pytest.approx(1.0, abs=1e-8)
    assert sol.primal_blocks[0][0, 0] == pytest.approx(1.0, abs=1e-7)
    assert sol.primal_blocks[1][0, 0] == pytest.approx(0.0, abs=1e-7)


def test_contradictory_equalities():
    A = np.stack([entry(2, 0, 0), entry(2, 0, 0)])
    prob = ConicProblem([2], [np.eye(2)], [A], [1.0, 2.0], ["x11=1", "x11=2"])
    sol = solve(prob)
    assert sol.status is Status.PRIMAL_INFEASIBLE
    rep = check_certificate(prob, sol)
    assert rep.ok, rep.failures()


def test_redundant_constraint_reported():
    A = np.stack([entry(2, 0, 0), entry(2, 0, 0)])
    sol = solve(ConicProblem([2], [np.eye(2)], [A], [1.0, 1.0], ["a", "b"]))
    assert sol.status is Status.OPTIMAL
    assert sol.residuals["rank_deficiency"] == 1
    assert "redundant" in sol.message


def test_dual_infeasible():
    # min -x over x >= 0 with no constraint binding x
    one = np.ones((1, 1))
    prob = ConicProblem([1, 1], [-one, 0 * one], [0 * one[None], one[None]], [1.0], ["y=1"])
    sol = solve(prob)
    assert sol.status is Status.DUAL_INFEASIBLE
    assert check_certificate(prob, sol).ok


def test_mg3_healthy(net3):
    prob = assemble(net3, network_limits(net3))
    sol = solve(prob)
    assert sol.status is Status.OPTIMAL
    assert sol.iterations < 50
    assert sol.residuals["gap"] <= 1e-8
    assert check_certificate(prob, sol).ok
    assert sol.objective_dual <= sol.objective_primal + 10 * 1e-8 * (1 + abs(sol.objective_primal))


@pytest.mark.parametrize("name", sdp_fixture_names("feasible"))
def test_feasible_fixture(name):
    doc = load_fixture(name)
    prob = ConicProblem.from_json(doc)
    sol = solve(prob)
    expected = doc["expected"]["objective"]
    assert sol.status is Status.OPTIMAL
    assert abs(sol.objective_primal - expected) <= 1e-7 * max(1.0, abs(expected))
    assert sol.residuals["gap"] <= 1e-8
    ext = doc["expected"].get("external_objective")
    if ext is not None:     # the external solver agrees with the analytic optimum
        assert abs(ext - expected) <= 1e-5 * max(1.0, abs(expected))


@pytest.mark.parametrize("name", sdp_fixture_names("infeasible"))
def test_infeasible_fixture(name):
    prob = ConicProblem.from_json(load_fixture(name))
    sol = solve(prob)
    assert sol.status is Status.PRIMAL_INFEASIBLE
    rep = check_certificate(prob, sol)
    assert rep.ok, rep.failures()


@pytest.mark.parametrize("name", ["feasible_00.json", "feasible_07.json", "feasible_15.json"])
def test_permutation_invariance(name):
    prob = ConicProblem.from_json(load_fixture(name))
    base = solve(prob)
    perm = np.random.default_rng(0).permutation(prob.m)
    other = solve(permuted(prob, perm))
    assert other.status is base.status
    assert abs(other.objective_primal - base.objective_primal) <= 1e-9 * (1 + abs(base.objective_primal))


def test_permutation_invariance_mg3(net3):
    prob = assemble(net3, network_limits(net3))
    base = solve(prob)
    other = solve(permuted(prob, np.arange(prob.m)[::-1].copy()))
    assert other.status is base.status
    assert abs(other.objective_primal - base.objective_primal) <= 1e-9 * (1 + abs(base.objective_primal))


@pytest.mark.parametrize("name", ["feasible_01.json", "feasible_09.json", "infeasible_random_a.json"])
@pytest.mark.parametrize("fb, fc", [(10, 1), (1, 10), (10, 10)])
def test_scaling_invariance(name, fb, fc):
    """X -> fb X maps the feasible sets onto each other, so the optimum scales by fb * fc."""
    prob = ConicProblem.from_json(load_fixture(name))
    scaled = ConicProblem(prob.block_dims, [fc * C for C in prob.objective], prob.A, fb * prob.b,
                          prob.labels)
    a, b = solve(prob), solve(scaled)
    assert a.status is b.status
    if a.status is Status.OPTIMAL:
        assert b.objective_primal == pytest.approx(fb * fc * a.objective_primal, rel=1e-8)


def test_deterministic():
    prob = ConicProblem.from_json(load_fixture("feasible_03.json"))
    a, b = solve(prob), solve(prob)
    assert a.iterations == b.iterations
    assert a.objective_primal == b.objective_primal
    for X, Y in zip(a.primal_blocks, b.primal_blocks):
        assert np.array_equal(X, Y)


def test_corrupted_primal_flagged():
    prob = ConicProblem.from_json(load_fixture("feasible_02.json"))
    sol = solve(prob)
    X = [B.copy() for B in sol.primal_blocks]
    j = int(np.argmax(prob.block_dims))
    X[j][0, 0] += 1e-3
    bad = ConicSolution(sol.status, X, sol.dual_vector, sol.dual_blocks, sol.objective_primal,
                        sol.objective_dual, sol.iterations)
    rep = check_certificate(prob, bad)
    assert not rep.ok
    assert "primal_residual" in rep.failures()


def test_max_iter():
    prob = ConicProblem.from_json(load_fixture("feasible_05.json"))
    sol = solve(prob, SolverSettings(max_iter=2))
    assert sol.status is Status.MAX_ITER


def test_settings_validation():
    with pytest.raises(ValueError):
        SolverSettings(tol_gap=0)
    with pytest.raises(ValueError):
        SolverSettings(max_iter=0)


@given(st.integers(1, 4), st.integers(0, 2**31 - 1))
@settings(max_examples=25, deadline=None)
def test_random_lp_matches_vertex_enumeration(n, seed):
    """Box-constrained LP as 1x1 blocks: min c'x, x + s = u, x, s >= 0."""
    rng = np.random.default_rng(seed)
    c = rng.normal(size=n)
    u = rng.uniform(0.5, 2.0, n)
    one = np.ones((1, 1))
    dims = [1] * (2 * n)
    C = [c[i] * one for i in range(n)] + [0 * one] * n
    A = [np.zeros((n, 1, 1)) for _ in dims]
    for i in range(n):
        A[i][i] = 1.0
        A[n + i][i] = 1.0
    sol = solve(ConicProblem(dims, C, A, u, [f"box{i}" for i in range(n)]))
    assert sol.status is Status.OPTIMAL
    assert sol.objective_primal == pytest.approx(np.sum(np.minimum(c, 0) * u), abs=1e-7)
