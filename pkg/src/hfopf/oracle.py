"""Brute-force reference: Newton-Raphson power flow over a dispatch grid.

Shares nothing with the lifted SDP: every quantity here comes from complex
arithmetic on bus voltages, so it is an independent check of the relaxation.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from .health import DeratedLimits, bus_voltage_bands
from .network import BessUnit, Generator, Network, branch_flow, build_admittance, complex_injection

_FEAS_TOL = 1e-9
MAX_SWEPT_AXES = 4


class OracleGuardError(ValueError):
    """The case is too large for exhaustive enumeration."""


@dataclass(frozen=True)
class OracleSettings:
    p_steps: int = 9
    q_steps: int = 9
    v_steps: int = 5
    newton_tol: float = 1e-10
    newton_max_iter: int = 30

    def __post_init__(self):
        if min(self.p_steps, self.q_steps, self.v_steps) < 2:
            raise ValueError("grid steps must be >= 2")
        if self.newton_tol <= 0 or self.newton_max_iter < 1:
            raise ValueError("Newton tolerance must be positive and max_iter >= 1")

    def refined(self) -> "OracleSettings":
        """Halve every grid spacing; the refined grid contains the original points."""
        return OracleSettings(2 * self.p_steps - 1, 2 * self.q_steps - 1, 2 * self.v_steps - 1,
                              self.newton_tol, self.newton_max_iter)


@dataclass
class PowerFlowResult:
    voltages: np.ndarray        # (..., n)
    converged: np.ndarray       # (...,) bool
    iterations: int
    mismatch: np.ndarray        # (...,) final max-abs mismatch


@dataclass
class OracleResult:
    best_cost: float | None
    best_dispatch: dict = field(default_factory=dict)
    feasible_count: int = 0
    grid_size: int = 0
    cell_bound: float | None = None     # empirical cost variation over one grid cell

    def __post_init__(self):
        if (self.best_cost is None) != (self.feasible_count == 0):
            raise ValueError("best_cost must be present iff some grid point is feasible")


def newton_pf(network: Network, p_inj, q_inj, slack_voltage, slack_bus: int | None = None,
              tol: float = 1e-10, max_iter: int = 30, Y=None) -> PowerFlowResult:
    """Polar Newton-Raphson power flow, vectorised over leading batch axes.

    ``p_inj``/``q_inj`` hold net injections (generation minus load) at every
    bus, shape ``(..., n)``; entries at the slack bus are ignored. The slack
    bus is held at ``slack_voltage`` with angle zero.
    """
    n = network.n_bus
    slack = network.reference_bus if slack_bus is None else slack_bus
    Y = build_admittance(network) if Y is None else Y
    P = np.asarray(p_inj, dtype=float)
    Q = np.asarray(q_inj, dtype=float)
    batch = np.broadcast_shapes(P.shape[:-1], Q.shape[:-1], np.shape(slack_voltage))
    if not batch:       # solve a single case as a batch of one
        res = newton_pf(network, P[None], Q[None], np.reshape(slack_voltage, (1,)), slack,
                        tol, max_iter, Y)
        return PowerFlowResult(res.voltages[0], res.converged[0], res.iterations, res.mismatch[0])
    P = np.broadcast_to(P, batch + (n,))
    Q = np.broadcast_to(Q, batch + (n,))
    vs = np.broadcast_to(np.asarray(slack_voltage, dtype=float), batch)

    pq = np.array([k for k in range(n) if k != slack], dtype=int)
    npq = pq.size
    theta = np.zeros(batch + (n,))
    vm = np.ones(batch + (n,))
    vm[..., slack] = vs

    def mismatch(theta, vm):
        V = vm * np.exp(1j * theta)
        S = V * np.conj(V @ Y.T)
        return np.concatenate([P[..., pq] - S.real[..., pq], Q[..., pq] - S.imag[..., pq]], -1), V

    f, V = mismatch(theta, vm)
    it = 0
    with np.errstate(all="ignore"):
        for it in range(1, max_iter + 1):
            err = np.max(np.abs(f), axis=-1) if npq else np.zeros(batch)
            active = np.isfinite(err) & (err > tol)
            if not active.any():
                it -= 1
                break
            # analytic polar Jacobian of (P, Q) w.r.t. (theta, |V|)
            I = V @ Y.T
            S = V * np.conj(I)
            idx = np.arange(n)
            dS_dth = -1j * V[..., :, None] * np.conj(Y[None] * V[..., None, :])
            dS_dth[..., idx, idx] += 1j * S
            Vn = V / vm
            dS_dvm = V[..., :, None] * np.conj(Y[None] * Vn[..., None, :])
            dS_dvm[..., idx, idx] += np.conj(I) * Vn
            J = np.concatenate([
                np.concatenate([dS_dth.real[..., pq[:, None], pq], dS_dvm.real[..., pq[:, None], pq]], -1),
                np.concatenate([dS_dth.imag[..., pq[:, None], pq], dS_dvm.imag[..., pq[:, None], pq]], -1),
            ], -2)
            J = np.where(active[..., None, None], J, np.eye(2 * npq))
            step = np.linalg.solve(J, np.where(active[..., None], f, 0.0)[..., None])[..., 0]
            step = np.where(np.isfinite(step), step, np.nan)
            theta[..., pq] += step[..., :npq]
            vm[..., pq] += step[..., npq:]
            f, V = mismatch(theta, vm)
        err = np.max(np.abs(f), axis=-1) if npq else np.zeros(batch)
    converged = np.isfinite(err) & (err <= tol) & np.all(np.isfinite(V), axis=-1)
    return PowerFlowResult(V, converged, it, err)


def slack_source(network: Network, limits: Mapping[str, DeratedLimits]) -> str:
    """Generator with the largest derated capacity; ties go to the earlier unit."""
    gens = [(ref, unit) for ref, unit in network.sources() if isinstance(unit, Generator)]
    if not gens:
        raise ValueError("the oracle needs at least one generator as slack")
    return max(gens, key=lambda item: limits[item[0]].p_max)[0]


def _axis(lo, hi, steps):
    return np.array([lo]) if hi - lo <= 1e-12 else np.linspace(lo, hi, steps)


def _grid(network, limits, settings, slack_ref):
    """Axes of the search grid: (name, values) pairs in lexicographic order."""
    axes = []
    for ref, unit in network.sources():
        if ref == slack_ref:
            continue
        lim = limits[ref]
        axes.append((f"{ref}.p", _axis(lim.p_min, lim.p_max, settings.p_steps)))
        axes.append((f"{ref}.q", _axis(lim.q_min, lim.q_max, settings.q_steps)))
    swept = sum(1 for _, v in axes if v.size > 1)
    if swept > MAX_SWEPT_AXES:
        raise OracleGuardError(f"{swept} swept P/Q axes exceed the oracle limit of {MAX_SWEPT_AXES}; "
                               "exhaustive enumeration would be too slow")
    vmin, vmax = bus_voltage_bands(network, limits)
    bus = network.source(slack_ref).bus
    if vmin[bus] > vmax[bus]:
        v_axis = np.array([])      # empty band: nothing to enumerate
    else:
        v_axis = _axis(vmin[bus], vmax[bus], settings.v_steps)
    axes.append(("slack.v", v_axis))
    return axes


def _evaluate(network, limits, settings, slack_ref, axes, points, load_scale):
    """Power flow, constraint check and cost for every grid point (rows of ``points``).

    Returns ``(converged, feasible, cost)``; cost is NaN where the power flow failed.
    """
    Y = build_admittance(network)
    load = network.loads(load_scale)
    slack_bus = network.source(slack_ref).bus
    N = points.shape[0]
    P = np.tile(-load.real, (N, 1))
    Q = np.tile(-load.imag, (N, 1))
    col = {name: j for j, (name, _) in enumerate(axes)}
    refs = [ref for ref, _ in network.sources()]
    for ref, unit in network.sources():
        if ref != slack_ref:
            P[:, unit.bus] += points[:, col[f"{ref}.p"]]
            Q[:, unit.bus] += points[:, col[f"{ref}.q"]]
    pf = newton_pf(network, P, Q, points[:, col["slack.v"]], slack_bus,
                   settings.newton_tol, settings.newton_max_iter, Y)
    conv = pf.converged
    V = np.where(conv[:, None], pf.voltages, 0)
    ok = conv.copy()

    S = complex_injection(network, V, Y)
    p = {}
    q = {}
    for ref, unit in network.sources():
        if ref == slack_ref:
            p[ref] = S[:, unit.bus].real + load[unit.bus].real
            q[ref] = S[:, unit.bus].imag + load[unit.bus].imag
        else:
            p[ref] = points[:, col[f"{ref}.p"]]
            q[ref] = points[:, col[f"{ref}.q"]]
        lim = limits[ref]
        ok &= (p[ref] >= lim.p_min - _FEAS_TOL) & (p[ref] <= lim.p_max + _FEAS_TOL)
        ok &= (q[ref] >= lim.q_min - _FEAS_TOL) & (q[ref] <= lim.q_max + _FEAS_TOL)
        if isinstance(unit, BessUnit):
            e_next = unit.e_now - p[ref] * unit.horizon
            ok &= (e_next >= lim.e_min - _FEAS_TOL) & (e_next <= lim.e_max + _FEAS_TOL)
    vmin, vmax = bus_voltage_bands(network, limits)
    mag = np.abs(V)
    ok &= np.all((mag >= vmin - _FEAS_TOL) & (mag <= vmax + _FEAS_TOL), axis=1)
    for br in network.branches:
        for reverse in (False, True):
            ok &= np.abs(branch_flow(br, V, reverse)) <= br.s_max + _FEAS_TOL
    cost = sum(network.source(ref).cost(p[ref]) for ref in refs)
    return conv, ok, np.where(conv, cost, np.nan), p, q, V


def oracle_dispatch(network: Network, limits: Mapping[str, DeratedLimits],
                    settings: OracleSettings | None = None, load_scale: float = 1.0,
                    chunk: int = 50_000) -> OracleResult:
    """Cheapest feasible point of a uniform grid over the dispatch decisions.

    Axes: P and Q of every non-slack source within its derated limits, and
    the slack voltage magnitude within its band. Ties are broken by the
    lexicographic grid index, so the result is deterministic.
    """
    settings = settings or OracleSettings()
    slack_ref = slack_source(network, limits)
    axes = _grid(network, limits, settings, slack_ref)
    shape = tuple(v.size for _, v in axes)
    size = int(np.prod(shape))
    if size == 0:
        return OracleResult(None, {}, 0, 0)

    best = (np.inf, None)
    feasible = 0
    flat = np.arange(size)
    for start in range(0, size, chunk):
        ids = flat[start:start + chunk]
        sub = np.unravel_index(ids, shape)
        points = np.stack([axes[j][1][sub[j]] for j in range(len(axes))], axis=1)
        _, ok, cost, *_ = _evaluate(network, limits, settings, slack_ref, axes, points, load_scale)
        feasible += int(ok.sum())
        if ok.any():
            i = int(np.argmin(np.where(ok, cost, np.inf)))   # first minimum = lowest grid index
            if cost[i] < best[0]:
                best = (float(cost[i]), int(ids[i]))
    if best[1] is None:
        return OracleResult(None, {}, 0, size)

    sub = np.unravel_index(best[1], shape)
    point = np.array([[axes[j][1][sub[j]] for j in range(len(axes))]])
    _, _, _, p, q, V = _evaluate(network, limits, settings, slack_ref, axes, point, load_scale)
    dispatch = {"p": {r: float(v[0]) for r, v in p.items()},
                "q": {r: float(v[0]) for r, v in q.items()},
                "voltages": V[0], "slack": slack_ref, "grid_index": tuple(int(s) for s in sub)}
    bound = _cell_bound(network, limits, settings, slack_ref, axes, sub, best[0], load_scale)
    return OracleResult(best[0], dispatch, feasible, size, bound)


def _cell_bound(network, limits, settings, slack_ref, axes, sub, best_cost, load_scale):
    """Largest cost change when moving one grid step along each axis, summed over axes.

    A Lipschitz-style estimate of how far the grid optimum can sit above the
    continuous optimum inside the surrounding cell. Feasibility of the
    neighbours is ignored: only the cost slope matters here.
    """
    nbrs = []
    for j, (_, values) in enumerate(axes):
        if values.size < 2:
            continue
        for step in (-1, 1):
            k = sub[j] + step
            if 0 <= k < values.size:
                pt = [axes[i][1][sub[i]] for i in range(len(axes))]
                pt[j] = values[k]
                nbrs.append((j, pt))
    if not nbrs:
        return 0.0
    conv, _, cost, *_ = _evaluate(network, limits, settings, slack_ref, axes,
                                  np.array([pt for _, pt in nbrs]), load_scale)
    per_axis = {}
    for (j, _), c, good in zip(nbrs, cost, conv):
        if good:
            per_axis[j] = max(per_axis.get(j, 0.0), abs(c - best_cost))
    return float(sum(per_axis.values()))

