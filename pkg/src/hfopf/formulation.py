"""Lifted matrices and the block-structured standard-form SDP for health-aware OPF.

The relaxation works on the real voltage vector ``v = [Re V; Im V]`` and the
lifted variable ``W ~ v v^T`` of size ``2n``. The solver block holds ``W``
without the row and column of ``Im V_ref``, which is identically zero. Every bus injection, squared
voltage magnitude and branch flow is a trace ``Tr{A W}`` against a constant
symmetric matrix built here.

Standard form: ``min sum_b Tr{C_b X_b} + offset`` subject to
``sum_b Tr{A_ib X_b} = b_i`` and every block ``X_b`` PSD. Two-sided bounds
become equalities with scalar slack blocks, flow limits become 3x3 Schur
blocks and quadratic costs become 2x2 epigraph blocks.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from .health import DeratedLimits, bus_voltage_bands
from .network import Network, build_admittance


def _real_lift(phi: np.ndarray):
    """Real symmetric pair giving Re and Im of ``V_k conj((phi V)_k)`` for row-selected ``phi``."""
    s, d = phi + phi.T, phi - phi.T
    re = 0.5 * np.block([[s.real, -d.imag], [d.imag, s.real]])
    im = -0.5 * np.block([[s.imag, d.real], [-d.real, s.imag]])
    return re, im


@dataclass(frozen=True)
class LiftedBusMatrices:
    Yk: np.ndarray
    Ybar_k: np.ndarray
    Mk: np.ndarray


@dataclass(frozen=True)
class LiftedBranchMatrices:
    Ykl: np.ndarray
    Ybar_kl: np.ndarray


def lift_bus(Y: np.ndarray, k: int) -> LiftedBusMatrices:
    n = Y.shape[0]
    if not 0 <= k < n:
        raise IndexError(f"bus {k} out of range")
    phi = np.zeros_like(Y, dtype=complex)
    phi[k] = Y[k]
    Yk, Ybar = _real_lift(phi)
    ek = np.zeros((n, n))
    ek[k, k] = 1.0
    return LiftedBusMatrices(Yk, Ybar, np.kron(np.eye(2), ek))


def lift_branch(y: complex, k: int, l: int, n: int) -> LiftedBranchMatrices:
    """Lifted flow matrices for ``S_kl = conj(y) V_k conj(V_k) - conj(y) V_k conj(V_l)``."""
    phi = np.zeros((n, n), dtype=complex)
    phi[k, k] = y
    phi[k, l] = -y
    return LiftedBranchMatrices(*_real_lift(phi))


def real_voltage(V) -> np.ndarray:
    V = np.asarray(V, dtype=complex)
    return np.concatenate([V.real, V.imag])


@dataclass
class ConicProblem:
    block_dims: list[int]
    objective: list[np.ndarray]
    A: list[np.ndarray]          # per block, shape (m, d, d)
    b: np.ndarray
    labels: list[str]
    objective_offset: float = 0.0
    block_roles: list[tuple] = field(default_factory=list)
    w_dropped: int | None = None   # index of v removed from block 0 (held at zero)

    def __post_init__(self):
        self.b = np.asarray(self.b, dtype=float)
        m = len(self.b)
        if len(self.labels) != m:
            raise ValueError("one label per constraint required")
        if not (len(self.block_dims) == len(self.objective) == len(self.A)):
            raise ValueError("block count mismatch")
        for d, C, A in zip(self.block_dims, self.objective, self.A):
            if C.shape != (d, d) or A.shape != (m, d, d):
                raise ValueError(f"block of size {d} has inconsistent data")
            if not (np.array_equal(C, C.T) and np.array_equal(A, A.transpose(0, 2, 1))):
                raise ValueError("problem data must be symmetric")

    @property
    def m(self) -> int:
        return len(self.b)

    def constraint(self, i: int) -> list[np.ndarray]:
        return [A[i] for A in self.A]

    def apply(self, X) -> np.ndarray:
        """``A(X)``: the constraint left-hand sides."""
        return sum(np.einsum("mij,ij->m", A, Xb) for A, Xb in zip(self.A, X))

    def full_W(self, X0) -> np.ndarray:
        """Block 0 with the dropped coordinate reinserted as a zero row/column."""
        X0 = np.asarray(X0, dtype=float)
        if self.w_dropped is None:
            return X0
        k = self.w_dropped
        return np.insert(np.insert(X0, k, 0.0, axis=0), k, 0.0, axis=1)

    def reduce_W(self, W) -> np.ndarray:
        W = np.asarray(W, dtype=float)
        if self.w_dropped is None:
            return W
        return np.delete(np.delete(W, self.w_dropped, axis=0), self.w_dropped, axis=1)

    def value(self, X) -> float:
        return float(sum(np.sum(C * Xb) for C, Xb in zip(self.objective, X))) + self.objective_offset

    # -- debug dump -------------------------------------------------------
    def to_json(self) -> dict:
        def triplets(mats):
            out = []
            for blk, M in enumerate(mats):
                r, c = np.nonzero(np.triu(M))
                out += [[blk, int(i), int(j), float(M[i, j])] for i, j in zip(r, c)]
            return out

        return {
            "block_dims": list(self.block_dims),
            "objective_offset": self.objective_offset,
            "w_dropped": self.w_dropped,
            "objective": triplets(self.objective),
            "constraints": [
                {"label": lab, "b": float(bi), "entries": triplets(self.constraint(i))}
                for i, (lab, bi) in enumerate(zip(self.labels, self.b))],
        }

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=1)

    @classmethod
    def from_json(cls, doc: dict) -> "ConicProblem":
        dims = [int(d) for d in doc["block_dims"]]
        cons = doc["constraints"]
        m = len(cons)
        C = [np.zeros((d, d)) for d in dims]
        A = [np.zeros((m, d, d)) for d in dims]
        for blk, i, j, v in doc["objective"]:
            C[blk][i, j] = C[blk][j, i] = v
        for k, con in enumerate(cons):
            for blk, i, j, v in con["entries"]:
                A[blk][k, i, j] = A[blk][k, j, i] = v
        drop = doc.get("w_dropped")
        return cls(dims, C, A, [c["b"] for c in cons], [c["label"] for c in cons],
                   float(doc.get("objective_offset", 0.0)),
                   w_dropped=None if drop is None else int(drop))


class _Builder:
    def __init__(self, n2):
        self.dims = [n2]
        self.objective = {0: np.zeros((n2, n2))}
        self.rows = []       # (label, {block: matrix}, rhs)
        self.roles = [("W",)]
        self.offset = 0.0

    def block(self, d, role):
        self.dims.append(d)
        self.roles.append(role)
        return len(self.dims) - 1

    def row(self, label, terms, rhs):
        self.rows.append((label, terms, float(rhs)))
        return len(self.rows) - 1

    def slack(self, label, terms, rhs, sign):
        i = len(self.rows)
        s = self.block(1, ("slack", i, sign))
        self.row(label, {**terms, s: np.array([[sign]], dtype=float)}, rhs)

    def bounded(self, label, Wmat, lo, hi):
        """``lo <= Tr{Wmat W} <= hi`` as equalities with slacks."""
        if abs(hi - lo) <= 1e-12 * max(1.0, abs(lo)):
            self.row(f"{label}.eq", {0: Wmat}, 0.5 * (lo + hi))
            return
        self.slack(f"{label}.lo", {0: Wmat}, lo, -1.0)
        self.slack(f"{label}.hi", {0: Wmat}, hi, 1.0)

    def build(self, drop=None):
        m = len(self.rows)
        A = [np.zeros((m, d, d)) for d in self.dims]
        for i, (_, terms, _) in enumerate(self.rows):
            for blk, mat in terms.items():
                A[blk][i] = mat
        C = [self.objective.get(j, np.zeros((d, d))) for j, d in enumerate(self.dims)]
        dims = list(self.dims)
        if drop is not None:
            keep = np.delete(np.arange(dims[0]), drop)
            A[0] = A[0][:, keep][:, :, keep]
            C[0] = C[0][np.ix_(keep, keep)]
            dims[0] -= 1
        return ConicProblem(dims, C, A, [r[2] for r in self.rows],
                            [r[0] for r in self.rows], self.offset, list(self.roles),
                            w_dropped=drop)


def _entry(d, i, j):
    E = np.zeros((d, d))
    E[i, j] += 0.5
    E[j, i] += 0.5
    return E


def assemble(network: Network, limits: Mapping[str, DeratedLimits],
             load_scale: float = 1.0) -> ConicProblem:
    """Relaxed health-aware OPF as a standard-form block SDP.

    Infeasible-by-construction limits (an empty voltage band) are assembled
    as-is; the solver reports the infeasibility.
    """
    missing = {ref for ref, _ in network.sources()} - set(limits)
    if missing:
        raise KeyError(f"no limits supplied for {sorted(missing)}")
    if load_scale <= 0:
        raise ValueError("load_scale must be positive")
    n = network.n_bus
    Y = build_admittance(network)
    lifted = [lift_bus(Y, k) for k in range(n)]
    load = network.loads(load_scale)
    vmin, vmax = bus_voltage_bands(network, limits)
    bld = _Builder(2 * n)

    for k in range(n):
        L = lifted[k]
        src = network.source_at(k)
        if src is None:
            p_rng = q_rng = (0.0, 0.0)
        else:
            lim = limits[src[0]]
            p_rng, q_rng = (lim.p_min, lim.p_max), (lim.q_min, lim.q_max)
        bus = k + 1
        bld.bounded(f"P[{bus}]", L.Yk, p_rng[0] - load[k].real, p_rng[1] - load[k].real)
        bld.bounded(f"Q[{bus}]", L.Ybar_k, q_rng[0] - load[k].imag, q_rng[1] - load[k].imag)
        bld.bounded(f"V[{bus}]", L.Mk, vmin[k] ** 2, vmax[k] ** 2)

    for i, br in enumerate(network.branches):
        for reverse in (False, True):
            k, l = (br.to_bus, br.from_bus) if reverse else (br.from_bus, br.to_bus)
            F = lift_branch(br.series_admittance, k, l, n)
            blk = bld.block(3, ("flow", i, reverse))
            tag = f"S[{k + 1}->{l + 1}]"
            bld.row(f"{tag}.smax", {blk: _entry(3, 0, 0)}, br.s_max ** 2)
            bld.row(f"{tag}.p", {blk: _entry(3, 0, 1), 0: -F.Ykl}, 0.0)
            bld.row(f"{tag}.q", {blk: _entry(3, 0, 2), 0: -F.Ybar_kl}, 0.0)
            bld.row(f"{tag}.one1", {blk: _entry(3, 1, 1)}, 1.0)
            bld.row(f"{tag}.zero", {blk: _entry(3, 1, 2)}, 0.0)
            bld.row(f"{tag}.one2", {blk: _entry(3, 2, 2)}, 1.0)

    for ref, unit in network.sources():
        k = unit.bus
        p_load = load[k].real
        # P_G = Tr{Yk W} + P_D
        bld.objective[0] = bld.objective[0] + unit.cost_c1 * lifted[k].Yk
        bld.offset += unit.cost_c1 * p_load + unit.cost_c0
        if unit.cost_c2 > 0:
            r = np.sqrt(unit.cost_c2)
            blk = bld.block(2, ("cost", ref))
            bld.row(f"C[{ref}].one", {blk: _entry(2, 0, 0)}, 1.0)
            bld.row(f"C[{ref}].p", {blk: _entry(2, 0, 1), 0: -r * lifted[k].Yk}, r * p_load)
            bld.objective[blk] = _entry(2, 1, 1)

    # Im V_ref is removed from the W block: with it, every global rotation of
    # V is optimal and the interior-point limit is a rank-2 average of
    # rotations; pinning it by an equality instead leaves no strictly
    # feasible point and wrecks the Newton systems near the optimum
    return bld.build(drop=n + network.reference_bus)


def embed_rank_one(problem: ConicProblem, V) -> list[np.ndarray]:
    """Complete ``W = v v^T`` into a point for every block of ``problem``.

    Each auxiliary entry is pinned by exactly one constraint; cost epigraph
    blocks are closed at their tight value ``c2 P^2``. ``V`` is first rotated
    to a zero reference angle. The point satisfies the equalities by
    construction and is PSD iff ``V`` meets the original nonlinear
    constraints.
    """
    V = np.asarray(V, dtype=complex)
    if problem.w_dropped is not None:
        ref = problem.w_dropped - V.size
        V = V * np.exp(-1j * np.angle(V[ref]))
    v = real_voltage(V)
    X = [problem.reduce_W(np.outer(v, v))] + [np.zeros((d, d)) for d in problem.block_dims[1:]]
    W_part = np.einsum("mij,ij->m", problem.A[0], X[0])
    for i in range(problem.m):
        rest = problem.b[i] - W_part[i]
        for blk in range(1, len(X)):
            Ai = problem.A[blk][i]
            if not Ai.any():
                continue
            r, c = np.argwhere(Ai != 0)[0]
            coef = Ai[r, c] * (1 if r == c else 2)
            X[blk][r, c] = X[blk][c, r] = rest / coef
    for blk, role in enumerate(problem.block_roles):
        if role and role[0] == "cost":
            X[blk][1, 1] = X[blk][0, 1] ** 2 / X[blk][0, 0]
    return X
