"""From an optimal lifted matrix back to voltages, dispatch and a verified operating point."""
from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Mapping

import numpy as np

from .formulation import ConicProblem, assemble, lift_bus
from .health import DeratedLimits, HealthProfile, bus_voltage_bands, network_limits
from .network import BessUnit, Network, branch_flow, build_admittance, complex_injection
from .solver import ConicSolution, SolverSettings, Status, check_certificate, solve

RANK1_TOL = 1e-5
VERIFY_TOL = 1e-6
_EIG_FLOOR = -1e-9


class DispatchStatus(str, Enum):
    EXACT = "EXACT"
    INEXACT = "INEXACT"
    INFEASIBLE = "INFEASIBLE"
    FAILED = "FAILED"        # solver gave neither an optimum nor a certificate


class InexactRelaxationError(ValueError):
    """Raised when voltages are requested from a W that is not numerically rank one."""

    def __init__(self, ratio: float, tol: float):
        super().__init__(f"relaxation is inexact: lambda2/lambda1 = {ratio:.3e} > {tol:.1e}")
        self.ratio = ratio
        self.tol = tol


def _eig(W):
    W = np.asarray(W, dtype=float)
    if W.ndim != 2 or W.shape[0] != W.shape[1]:
        raise ValueError("W must be a square matrix")
    if not np.allclose(W, W.T, rtol=0, atol=1e-10 * max(1.0, np.abs(W).max())):
        raise ValueError("W must be symmetric")
    e, Q = np.linalg.eigh(0.5 * (W + W.T))
    if e[0] < _EIG_FLOOR * max(1.0, e[-1]):
        raise ValueError(f"W is not PSD (smallest eigenvalue {e[0]:.3e})")
    return e, Q


def exactness(W) -> float:
    """``lambda2 / lambda1`` of ``W``; 0 means exactly rank one.

    A numerically zero ``W`` (``lambda1 <= 1e-12``) is the all-zero voltage
    profile and also reports 0.
    """
    e, _ = _eig(W)
    if e[-1] <= 1e-12:
        return 0.0
    if e.size < 2:
        return 0.0
    return float(max(e[-2], 0.0) / e[-1])


def recover_voltages(W, reference_bus: int, rank1_tol: float = RANK1_TOL) -> np.ndarray:
    """Complex bus voltages from a rank-one ``W`` over ``[Re V; Im V]``.

    The result is rotated so the reference bus has angle zero.
    """
    e, Q = _eig(W)
    n2 = e.size
    if n2 % 2:
        raise ValueError("W must have even dimension 2n")
    ratio = 0.0 if e[-1] <= 1e-12 else max(e[-2], 0.0) / e[-1]
    if ratio > rank1_tol:
        raise InexactRelaxationError(ratio, rank1_tol)
    n = n2 // 2
    if not 0 <= reference_bus < n:
        raise IndexError(f"reference bus {reference_bus} out of range")
    v = np.sqrt(max(e[-1], 0.0)) * Q[:, -1]
    V = v[:n] + 1j * v[n:]
    if abs(V[reference_bus]) > 0:
        V = V * np.exp(-1j * np.angle(V[reference_bus]))
    return V


@dataclass
class DispatchResult:
    """Outcome of one health-aware OPF solve, in per unit."""
    status: DispatchStatus
    voltages: np.ndarray | None
    p_gen: dict[str, float]
    q_gen: dict[str, float]
    bess_power: dict[str, float]        # positive = discharging
    cost_total: float | None
    exactness_ratio: float | None
    balance_residual: float | None = None
    limit_margins: dict[str, float] = field(default_factory=dict)
    load_scale: float = 1.0
    objective: float | None = None      # solver objective; a lower bound when INEXACT
    solver_status: str = ""
    iterations: int = 0
    certificate_ok: bool | None = None
    message: str = ""

    @property
    def ok(self) -> bool:
        return self.status is DispatchStatus.EXACT


@dataclass
class VerificationReport:
    """Worst margin per constraint family (negative = violated)."""
    margins: dict[str, float]
    balance_residual: float
    tol: float

    @property
    def ok(self) -> bool:
        return self.balance_residual <= self.tol and all(m >= -self.tol for m in self.margins.values())

    def violations(self) -> dict[str, float]:
        return {k: m for k, m in self.margins.items() if m < -self.tol}


def _worst(margins, key, value):
    margins[key] = min(margins.get(key, np.inf), float(value))


def verify(network: Network, limits: Mapping[str, DeratedLimits], result: DispatchResult,
           tol: float = VERIFY_TOL) -> VerificationReport:
    """Re-check every original constraint at the recovered point with complex arithmetic.

    Fills in ``result.balance_residual`` and ``result.limit_margins``.
    """
    if result.voltages is None:
        raise ValueError("verify needs recovered voltages")
    V = np.asarray(result.voltages, dtype=complex)
    load = network.loads(result.load_scale)
    injected = complex_injection(network, V)

    gen = np.zeros(network.n_bus, dtype=complex)
    margins: dict[str, float] = {}
    for ref, unit in network.sources():
        p = result.bess_power[ref] if isinstance(unit, BessUnit) else result.p_gen[ref]
        q = result.q_gen[ref]
        gen[unit.bus] += p + 1j * q
        lim = limits[ref]
        _worst(margins, "p_min", p - lim.p_min)
        _worst(margins, "p_max", lim.p_max - p)
        _worst(margins, "q_min", q - lim.q_min)
        _worst(margins, "q_max", lim.q_max - q)
    balance = float(np.max(np.abs(gen - load - injected)))

    vmin, vmax = bus_voltage_bands(network, limits)
    mag = np.abs(V)
    _worst(margins, "v_min", np.min(mag - vmin))
    _worst(margins, "v_max", np.min(vmax - mag))
    for br in network.branches:
        for reverse in (False, True):
            _worst(margins, "s_max", br.s_max - abs(branch_flow(br, V, reverse)))
    for ref, unit in network.sources():
        if isinstance(unit, BessUnit):
            lim = limits[ref]
            e_next = unit.e_now - result.bess_power[ref] * unit.horizon
            _worst(margins, "e_min", e_next - lim.e_min)
            _worst(margins, "e_max", lim.e_max - e_next)

    result.balance_residual = balance
    result.limit_margins = margins
    return VerificationReport(margins, balance, tol)


def _total_cost(network: Network, p: Mapping[str, float]) -> float:
    return float(sum(unit.cost(p[ref]) for ref, unit in network.sources()))


def dispatch_from_solution(network: Network, limits: Mapping[str, DeratedLimits],
                           problem: ConicProblem, solution: ConicSolution,
                           load_scale: float = 1.0, rank1_tol: float = RANK1_TOL,
                           verify_tol: float = VERIFY_TOL) -> DispatchResult:
    """Interpret a solver outcome as a dispatch."""
    common = dict(load_scale=load_scale, solver_status=solution.status.value,
                  iterations=solution.iterations, message=solution.message)
    if solution.status is Status.PRIMAL_INFEASIBLE:
        cert = check_certificate(problem, solution)
        return DispatchResult(DispatchStatus.INFEASIBLE, None, {}, {}, {}, None, None,
                              certificate_ok=cert.ok, **common)
    if solution.status is not Status.OPTIMAL:
        return DispatchResult(DispatchStatus.FAILED, None, {}, {}, {}, None, None, **common)

    W = problem.full_W(solution.primal_blocks[0])
    ratio = exactness(W)
    Y = build_admittance(network)
    load = network.loads(load_scale)
    p_gen, q_gen, bess = {}, {}, {}
    for ref, unit in network.sources():
        L = lift_bus(Y, unit.bus)
        p = float(np.sum(L.Yk * W)) + load[unit.bus].real
        q = float(np.sum(L.Ybar_k * W)) + load[unit.bus].imag
        q_gen[ref] = q
        (bess if isinstance(unit, BessUnit) else p_gen)[ref] = p
    result = DispatchResult(DispatchStatus.INEXACT, None, p_gen, q_gen, bess,
                            _total_cost(network, {**p_gen, **bess}), ratio,
                            objective=solution.objective_primal, **common)
    if ratio > rank1_tol:
        result.message = f"rank-one test failed (lambda2/lambda1 = {ratio:.2e}); cost is a lower bound"
        return result
    result.voltages = recover_voltages(W, network.reference_bus, rank1_tol)
    report = verify(network, limits, result, verify_tol)
    if report.ok:
        result.status = DispatchStatus.EXACT
    else:
        worst = ", ".join(f"{k}={v:.2e}" for k, v in report.violations().items())
        result.message = (f"recovered point fails verification (balance {report.balance_residual:.2e}"
                          + (f"; {worst}" if worst else "") + ")")
    return result


def run_opf(network: Network, profiles: Mapping[str, HealthProfile] | None = None, *,
            derate_voltage: bool = False, load_scale: float = 1.0, tables=None,
            settings: SolverSettings | None = None, rank1_tol: float = RANK1_TOL,
            verify_tol: float = VERIFY_TOL) -> DispatchResult:
    """Derate, assemble, solve, recover and verify in one call."""
    limits = network_limits(network, profiles, derate_voltage, tables)
    problem = assemble(network, limits, load_scale)
    solution = solve(problem, settings)
    return dispatch_from_solution(network, limits, problem, solution, load_scale,
                                  rank1_tol, verify_tol)
