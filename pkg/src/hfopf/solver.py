"""Dense primal-dual interior-point solver for small block-diagonal SDPs.

Solves ``min <C, X> s.t. A(X) = b, X >= 0`` and its dual
``max b'y s.t. A*(y) + S = C, S >= 0`` through the homogeneous self-dual
embedding, so an infeasible problem ends with a Farkas certificate instead
of diverging. Search directions use Nesterov-Todd scaling with a Mehrotra
predictor-corrector. 1x1 blocks are handled together as a nonnegative
orthant.
"""
from __future__ import annotations

import sys
from dataclasses import dataclass, field
from enum import Enum

import numpy as np
import scipy.linalg as sla

from .formulation import ConicProblem

_STEP_FRACTION = 0.99
_PERTURBATIONS = (0.0, 1e-12, 1e-11, 1e-10, 1e-9, 1e-8, 1e-7, 1e-6)
_EIG_FLOOR = -1e-9


class Status(str, Enum):
    OPTIMAL = "OPTIMAL"
    PRIMAL_INFEASIBLE = "PRIMAL_INFEASIBLE"
    DUAL_INFEASIBLE = "DUAL_INFEASIBLE"
    MAX_ITER = "MAX_ITER"
    NUMERICAL_FAILURE = "NUMERICAL_FAILURE"


@dataclass(frozen=True)
class SolverSettings:
    tol_gap: float = 1e-8
    tol_feas: float = 1e-8
    max_iter: int = 200
    infeas_threshold: float = 1e-10
    verbose: bool = False

    def __post_init__(self):
        if min(self.tol_gap, self.tol_feas, self.infeas_threshold) <= 0:
            raise ValueError("solver tolerances must be positive")
        if self.max_iter < 1:
            raise ValueError("max_iter must be >= 1")


@dataclass
class ConicSolution:
    status: Status
    primal_blocks: list[np.ndarray] | None
    dual_vector: np.ndarray | None
    dual_blocks: list[np.ndarray] | None
    objective_primal: float
    objective_dual: float
    iterations: int
    residuals: dict = field(default_factory=dict)
    certificate: np.ndarray | list | None = None
    message: str = ""


class _NumericalError(RuntimeError):
    pass


def _sym(M):
    return 0.5 * (M + np.swapaxes(M, -1, -2))


def _psd_sqrt(X):
    e, Q = np.linalg.eigh(X)
    if e[0] <= 0 or not np.all(np.isfinite(e)):
        raise _NumericalError("iterate left the PSD cone")
    return (Q * np.sqrt(e)) @ Q.T


class _Data:
    """Row-equilibrated problem split into PSD blocks and one orthant."""

    def __init__(self, problem: ConicProblem, rows):
        dims = problem.block_dims
        self.rows = rows
        A_all = [A[rows] for A in problem.A]
        flat = np.hstack([A.reshape(len(rows), -1) for A in A_all])
        norms = np.linalg.norm(flat, axis=1)
        self.D = 1.0 / np.where(norms > 0, norms, 1.0)
        self.gamma = max(1.0, max((np.abs(C).max() for C in problem.objective), default=1.0))
        self.m = len(rows)
        self.b = problem.b[rows] * self.D
        self.b_orig = problem.b[rows]
        self.sdp = [j for j, d in enumerate(dims) if d > 1]
        self.lp = [j for j, d in enumerate(dims) if d == 1]
        self.As = [A_all[j] * self.D[:, None, None] for j in self.sdp]
        self.Cs = [problem.objective[j] / self.gamma for j in self.sdp]
        self.Al = np.array([A_all[j][:, 0, 0] for j in self.lp]).T.reshape(self.m, len(self.lp))
        self.Al = self.Al * self.D[:, None]
        self.cl = np.array([problem.objective[j][0, 0] for j in self.lp]) / self.gamma
        self.nu = sum(dims)
        self.norm_b = np.linalg.norm(problem.b[rows])
        self.norm_c = np.sqrt(sum(np.sum(C * C) for C in problem.objective))

    def op(self, Xs, xl):
        out = self.Al @ xl
        for A, X in zip(self.As, Xs):
            out = out + np.einsum("mij,ij->m", A, X)
        return out

    def adj(self, y):
        return [np.einsum("m,mij->ij", y, A) for A in self.As], self.Al.T @ y

    def cdot(self, Xs, xl):
        return sum(np.sum(C * X) for C, X in zip(self.Cs, Xs)) + self.cl @ xl


def _lyap(lam, R):
    return 2.0 * R / (lam[:, None] + lam[None, :])


def _max_step(lam, d):
    """Largest alpha with ``diag(lam) + alpha d`` PSD."""
    r = 1.0 / np.sqrt(lam)
    e = np.linalg.eigvalsh(d * r[:, None] * r[None, :])[0]
    return np.inf if e >= 0 else -1.0 / e


def _max_step_vec(v, dv):
    neg = dv < 0
    return np.min(-v[neg] / dv[neg]) if neg.any() else np.inf


def _independent_rows(problem: ConicProblem):
    """Drop linearly dependent constraints, or return a Farkas vector if they conflict."""
    m = problem.m
    flat = np.hstack([A.reshape(m, -1) for A in problem.A])
    if m == 0:
        return np.arange(0), None, 0
    U, s, _ = np.linalg.svd(flat, full_matrices=True)
    tol = max(flat.shape) * np.finfo(float).eps * max(s[0] if s.size else 0.0, 1.0) * 10
    rank = int(np.sum(s > tol))
    if rank == m:
        return np.arange(m), None, 0
    null = U[:, rank:]
    proj = null.T @ problem.b
    scale = 1.0 + np.linalg.norm(problem.b)
    j = int(np.argmax(np.abs(proj)))
    if abs(proj[j]) > 1e-9 * scale:
        y = null[:, j] * np.sign(proj[j])
        return None, y / (problem.b @ y), m - rank
    _, _, piv = sla.qr(flat.T, pivoting=True, mode="economic")
    return np.sort(piv[:rank]), None, m - rank


def _blocks_out(data, problem, Xs, xl):
    out = [None] * len(problem.block_dims)
    for j, X in zip(data.sdp, Xs):
        out[j] = X
    for j, x in zip(data.lp, xl):
        out[j] = np.array([[x]])
    return out


def solve(problem: ConicProblem, settings: SolverSettings | None = None) -> ConicSolution:
    """Solve ``problem``; the status says whether the answer is an optimum or a certificate."""
    settings = settings or SolverSettings()
    log = (lambda msg: print(msg, file=sys.stderr)) if settings.verbose else (lambda msg: None)
    rows, farkas, deficiency = _independent_rows(problem)
    if farkas is not None:
        log("inconsistent linearly dependent constraints: infeasible")
        return ConicSolution(Status.PRIMAL_INFEASIBLE, None, None, None, np.nan, np.nan, 0,
                             {"rank_deficiency": deficiency}, certificate=farkas,
                             message="conflicting dependent constraints")
    if deficiency:
        log(f"dropped {deficiency} redundant constraint(s)")
    data = _Data(problem, rows)
    m = data.m

    xi = max(1.0, float(np.mean(np.abs(data.b)))) if m else 1.0
    Xs = [xi * np.eye(A.shape[1]) for A in data.As]
    Ss = [np.eye(A.shape[1]) for A in data.As]
    xl = np.full(len(data.lp), xi)
    sl = np.ones(len(data.lp))
    y = np.zeros(m)
    tau = kappa = 1.0
    off = problem.objective_offset
    stalls = 0
    res = {}
    fallback = None
    status, message = Status.MAX_ITER, "iteration limit reached"
    it = 0

    for it in range(settings.max_iter + 1):
        # residuals of the embedding (scaled data)
        AX = data.op(Xs, xl)
        ATy, ATyl = data.adj(y)
        F1 = AX - data.b * tau
        F2s = [a + S - C * tau for a, S, C in zip(ATy, Ss, data.Cs)]
        F2l = ATyl + sl - data.cl * tau
        cx = data.cdot(Xs, xl)
        by = data.b @ y
        F3 = by - cx - kappa
        mu = (sum(np.sum(X * S) for X, S in zip(Xs, Ss)) + xl @ sl + tau * kappa) / (data.nu + 1)

        # convergence tests in original units
        g = data.gamma
        norm_F2 = np.sqrt(sum(np.sum(F * F) for F in F2s) + F2l @ F2l)
        pres = np.linalg.norm(F1 / data.D) / tau / (1 + data.norm_b)
        dres = g * norm_F2 / tau / (1 + data.norm_c)
        pobj = g * cx / tau + off
        dobj = g * by / tau + off
        gap = abs(pobj - dobj) / (1 + abs(pobj))
        # the objective difference can vanish while both objectives are still
        # off, so convergence also asks for small complementarity
        compl = abs(g * (mu * (data.nu + 1) - tau * kappa) / tau ** 2) / (1 + abs(pobj))
        dual_cert = np.sqrt(sum(np.sum((a + S) ** 2) for a, S in zip(ATy, Ss))
                            + np.sum((ATyl + sl) ** 2))
        pinf = dual_cert / by if by > 0 else np.inf
        dinf = np.linalg.norm(AX / data.D) / (-cx) if cx < 0 else np.inf
        res = {"primal": pres, "dual": dres, "gap": gap, "complementarity": compl,
               "mu": mu, "tau": tau, "kappa": kappa,
               "primal_infeasibility": pinf, "dual_infeasibility": dinf,
               "rank_deficiency": deficiency}
        if it == 0:
            log(f"{'it':>3} {'mu':>10} {'pres':>10} {'dres':>10} {'gap':>10} {'step':>8}")
        if pres <= settings.tol_feas and dres <= settings.tol_feas and gap <= settings.tol_gap:
            if compl <= settings.tol_gap:
                status, message = Status.OPTIMAL, "converged"
                break
            # acceptable already; keep it in case further progress hits the
            # limits of double precision
            fallback = (it, Xs, Ss, xl, sl, y, tau, kappa, res)
        if pinf <= settings.tol_feas or (tau <= settings.infeas_threshold * kappa and by > 0):
            status, message = Status.PRIMAL_INFEASIBLE, "Farkas certificate found"
            break
        if dinf <= settings.tol_feas or (tau <= settings.infeas_threshold * kappa and cx < 0):
            status, message = Status.DUAL_INFEASIBLE, "dual Farkas certificate found"
            break
        if it == settings.max_iter:
            break

        try:
            step = _iterate(data, Xs, Ss, xl, sl, y, tau, kappa, F1, F2s, F2l, F3, mu)
        except (_NumericalError, np.linalg.LinAlgError) as exc:
            status, message = Status.NUMERICAL_FAILURE, str(exc)
            break
        Xs, Ss, xl, sl, y, tau, kappa, alpha = step
        log(f"{it:3d} {mu:10.3e} {pres:10.3e} {dres:10.3e} {gap:10.3e} {alpha:8.2e}")
        stalls = stalls + 1 if alpha < 1e-10 else 0
        if stalls >= 3:
            status, message = Status.NUMERICAL_FAILURE, "step length collapsed"
            break

    if status in (Status.NUMERICAL_FAILURE, Status.MAX_ITER) and fallback is not None:
        it, Xs, Ss, xl, sl, y, tau, kappa, res = fallback
        status = Status.OPTIMAL
        message = f"converged; complementarity {res['complementarity']:.1e} at the precision limit ({message})"
    if deficiency:
        message += f"; {deficiency} redundant constraint(s) dropped"
    iterations = it
    g = data.gamma
    Dy_full = np.zeros(problem.m)
    Dy_full[rows] = g * data.D * y
    S_orig = [g * S for S in Ss]
    sl_orig = g * sl
    if status is Status.OPTIMAL:
        X = _blocks_out(data, problem, [X / tau for X in Xs], xl / tau)
        S = _blocks_out(data, problem, [S / tau for S in S_orig], sl_orig / tau)
        yv = Dy_full / tau
        return ConicSolution(status, X, yv, S, g * data.cdot(Xs, xl) / tau + off,
                             float(problem.b @ yv) + off, iterations, res, message=message)
    if status is Status.PRIMAL_INFEASIBLE:
        cert = Dy_full / (problem.b @ Dy_full)
        return ConicSolution(status, None, None, None, np.nan, np.nan, iterations, res,
                             certificate=cert, message=message)
    if status is Status.DUAL_INFEASIBLE:
        cx = data.cdot(Xs, xl)
        cert = _blocks_out(data, problem, [X / -cx for X in Xs], xl / -cx)
        return ConicSolution(status, None, None, None, np.nan, np.nan, iterations, res,
                             certificate=cert, message=message)
    X = _blocks_out(data, problem, [X / tau for X in Xs], xl / tau)
    return ConicSolution(status, X, Dy_full / tau, None, g * data.cdot(Xs, xl) / tau + off,
                         float(problem.b @ Dy_full) / tau + off, iterations, res, message=message)


def _schur_solver(B):
    """Solver for ``B B^T p = r``, regularised only if ``B`` is numerically rank deficient."""
    m = B.shape[0]
    R = sla.qr(B.T, mode="r")[0][:m]
    diag = np.abs(np.diag(R))
    scale = max(float(diag.max()), 1e-300)
    for delta in _PERTURBATIONS:
        if delta:
            # Cholesky factor of R^T R + delta I via one more QR
            R = sla.qr(np.vstack([R, np.sqrt(delta) * scale * np.eye(m)]), mode="r")[0][:m]
        if np.abs(np.diag(R)).min() > 1e-14 * scale:
            break
    else:
        raise _NumericalError("Schur complement is singular")
    if not np.all(np.isfinite(R)):
        raise _NumericalError("non-finite Schur factor")

    def solve(r):
        t = sla.solve_triangular(R, r, trans="T")
        return sla.solve_triangular(R, t)
    return solve


def _axpy(d, e, a=1.0):
    """``d + a e`` for direction tuples ``(dXs, dSs, dxl, dsl, dy, dtau, dkappa)``."""
    return ([x + a * z for x, z in zip(d[0], e[0])], [x + a * z for x, z in zip(d[1], e[1])],
            d[2] + a * e[2], d[3] + a * e[3], d[4] + a * e[4], d[5] + a * e[5], d[6] + a * e[6])


def _norm(d):
    return np.sqrt(sum(np.sum(x * x) for x in d[0]) + sum(np.sum(x * x) for x in d[1])
                   + d[2] @ d[2] + d[3] @ d[3] + d[4] @ d[4] + d[5] ** 2 + d[6] ** 2)


def _iterate(data, Xs, Ss, xl, sl, y, tau, kappa, F1, F2s, F2l, F3, mu):
    m = data.m
    # Nesterov-Todd scaling per PSD block: X = G L G^T, S = G^-T L G^-1
    scal = []
    for X, S in zip(Xs, Ss):
        Xh, Sh = _psd_sqrt(X), _psd_sqrt(S)
        U, lam, Vt = np.linalg.svd(Sh @ Xh)
        if lam[-1] <= 0:
            raise _NumericalError("degenerate scaling point")
        G = Xh @ Vt.T / np.sqrt(lam)
        Gi = (U.T @ Sh) / np.sqrt(lam)[:, None]
        scal.append((G, Gi, G @ G.T, lam))
    lam_l = np.sqrt(xl * sl)
    g2_l = np.sqrt(xl / sl)   # G G^T on the orthant
    w_l = xl / sl             # its square

    # everything below works in NT-scaled coordinates (A~ = G^T A G), so the
    # badly conditioned W = G G^T is never formed; M = B B^T with B the
    # scaled constraint rows, factored by QR without squaring its conditioning
    At = [np.einsum("ki,mkl,lj->mij", G, A, G) for A, (G, *_) in zip(data.As, scal)]
    Ct = [G.T @ C @ G for C, (G, *_) in zip(data.Cs, scal)]
    Bl = data.Al * g2_l
    cl_t = data.cl * g2_l

    def op_t(Ys, yl):
        out = Bl @ yl
        for A, Y in zip(At, Ys):
            out = out + np.einsum("mij,ij->m", A, Y)
        return out

    def cdot_t(Ys, yl):
        return sum(np.sum(C * Y) for C, Y in zip(Ct, Ys)) + cl_t @ yl

    a = op_t(Ct, cl_t)
    c_w = cdot_t(Ct, cl_t)
    msolve = (_schur_solver(np.hstack([Bl] + [A.reshape(m, -1) for A in At]))
              if m else (lambda r: r))
    q = msolve(a + data.b)
    bma = data.b - a

    def kkt(rhs):
        # rhs = (r1, r2s, r2l, r3, Ts, tl, rk); Ts/tl are targets for scaled dx + ds
        r1, r2s, r2l, r3, Ts, tl, rk = rhs
        R2t = [G.T @ r2 @ G for (G, *_), r2 in zip(scal, r2s)]
        Ys = [T - R for T, R in zip(Ts, R2t)]
        yl = tl - g2_l * r2l
        h1 = r1 - op_t(Ys, yl)
        h2 = r3 + rk / tau + cdot_t(Ys, yl)
        p = msolve(h1)
        dtau = (h2 - bma @ p) / (bma @ q + c_w + kappa / tau)
        dy = p + q * dtau
        ATdy, ATdyl = data.adj(dy)
        dSs = [_sym(r2 - ad + C * dtau) for r2, ad, C in zip(r2s, ATdy, data.Cs)]
        dXs = []
        for (G, *_), A, C, T, R in zip(scal, At, Ct, Ts, R2t):
            dst = R - np.einsum("m,mij->ij", dy, A) + C * dtau
            dXs.append(_sym(G @ (T - dst) @ G.T))
        dsl = r2l - ATdyl + data.cl * dtau
        dxl = g2_l * (tl - g2_l * dsl)
        dkappa = (rk - kappa * dtau) / tau
        return dXs, dSs, dxl, dsl, dy, dtau, dkappa

    def scaled(d):
        dxt = [_sym(Gi @ dX @ Gi.T) for (_, Gi, _, _), dX in zip(scal, d[0])]
        dst = [_sym(G.T @ dS @ G) for (G, _, _, _), dS in zip(scal, d[1])]
        return dxt, dst, d[2] / g2_l, d[3] * g2_l

    def apply(d):
        dXs, dSs, dxl, dsl, dy, dtau, dkappa = d
        ATdy, ATdyl = data.adj(dy)
        dxt, dst, dxlt, dslt = scaled(d)
        return (data.op(dXs, dxl) - data.b * dtau,
                [ad + dS - C * dtau for ad, dS, C in zip(ATdy, dSs, data.Cs)],
                ATdyl + dsl - data.cl * dtau,
                data.b @ dy - data.cdot(dXs, dxl) - dkappa,
                [x + z for x, z in zip(dxt, dst)], dxlt + dslt,
                kappa * dtau + tau * dkappa)

    def residual(rhs, d):
        Kd = apply(d)
        return (rhs[0] - Kd[0], [x - z for x, z in zip(rhs[1], Kd[1])], rhs[2] - Kd[2],
                rhs[3] - Kd[3], [x - z for x, z in zip(rhs[4], Kd[4])], rhs[5] - Kd[5],
                rhs[6] - Kd[6])

    def solve_refined(rhs):
        # iterative refinement, kept only while it actually reduces the residual
        d = kkt(rhs)
        scale = 1.0 + _norm(_as_dir(rhs))
        r = residual(rhs, d)
        err = _norm(_as_dir(r))
        for _ in range(3):
            if err <= 1e-15 * scale:
                break
            trial = _axpy(d, kkt(r))
            r_trial = residual(rhs, trial)
            err_trial = _norm(_as_dir(r_trial))
            if not err_trial < 0.5 * err:
                break
            d, r, err = trial, r_trial, err_trial
        return d

    def rhs_for(eta, Rcs, Rcl, rk):
        Ts = [_lyap(lam, Rc) for (_, _, _, lam), Rc in zip(scal, Rcs)]
        return (-eta * F1, [-eta * F for F in F2s], -eta * F2l, -eta * F3, Ts, Rcl / lam_l, rk)

    def max_alpha(d, sd):
        dxt, dst, _, _ = sd
        alpha = np.inf
        for (_, _, _, lam), dx, ds in zip(scal, dxt, dst):
            alpha = min(alpha, _max_step(lam, dx), _max_step(lam, ds))
        return min(alpha, _max_step_vec(xl, d[2]), _max_step_vec(sl, d[3]),
                   _max_step_vec(np.array([tau, kappa]), np.array([d[5], d[6]])))

    # predictor
    aff = solve_refined(rhs_for(1.0, [-np.diag(lam ** 2) for *_, lam in scal],
                                -lam_l ** 2, -tau * kappa))
    saff = scaled(aff)
    alpha_a = min(1.0, max_alpha(aff, saff))
    dxta, dsta, dxla_t, dsla_t = saff
    gap_a = sum(np.sum((np.diag(lam) + alpha_a * dx) * (np.diag(lam) + alpha_a * ds))
                for (_, _, _, lam), dx, ds in zip(scal, dxta, dsta))
    gap_a += (xl + alpha_a * aff[2]) @ (sl + alpha_a * aff[3])
    gap_a += (tau + alpha_a * aff[5]) * (kappa + alpha_a * aff[6])
    sigma = float(np.clip((gap_a / (data.nu + 1) / mu) ** 3, 0.0, 1.0))

    # corrector
    Rcs = [sigma * mu * np.eye(len(lam)) - np.diag(lam ** 2) - _sym(dx @ ds)
           for (_, _, _, lam), dx, ds in zip(scal, dxta, dsta)]
    Rcl = sigma * mu - lam_l ** 2 - dxla_t * dsla_t
    rk = sigma * mu - tau * kappa - aff[5] * aff[6]
    d = solve_refined(rhs_for(1.0 - sigma, Rcs, Rcl, rk))
    alpha = min(1.0, _STEP_FRACTION * max_alpha(d, scaled(d)))

    dXs, dSs, dxl, dsl, dy, dtau, dkappa = d
    Xs = [_sym(X + alpha * dX) for X, dX in zip(Xs, dXs)]
    Ss = [_sym(S + alpha * dS) for S, dS in zip(Ss, dSs)]
    return (Xs, Ss, xl + alpha * dxl, sl + alpha * dsl, y + alpha * dy,
            tau + alpha * dtau, kappa + alpha * dkappa, alpha)


def _as_dir(rhs):
    """View a right-hand side as a direction tuple for norm computations."""
    r1, r2s, r2l, r3, Ts, tl, rk = rhs
    return (r2s, Ts, r2l, tl, r1, r3, rk)


# ---------------------------------------------------------------------------
# independent certificate checks

@dataclass
class CertificateReport:
    checks: dict[str, tuple[float, float]]   # name -> (value, allowed)

    @property
    def ok(self) -> bool:
        return all(v <= lim for v, lim in self.checks.values())

    def failures(self):
        return {k: v for k, v in self.checks.items() if v[0] > v[1]}


def check_certificate(problem: ConicProblem, solution: ConicSolution,
                      tol: float = 1e-8) -> CertificateReport:
    """Recompute optimality or infeasibility conditions from the raw problem data."""
    checks = {}
    if solution.status is Status.OPTIMAL:
        X, y, S = solution.primal_blocks, solution.dual_vector, solution.dual_blocks
        AX = sum(np.einsum("mij,ij->m", A, Xb) for A, Xb in zip(problem.A, X))
        checks["primal_residual"] = (
            float(np.linalg.norm(AX - problem.b) / (1 + np.linalg.norm(problem.b))), 10 * tol)
        dual = np.sqrt(sum(np.sum((np.einsum("m,mij->ij", y, A) + Sb - C) ** 2)
                           for A, Sb, C in zip(problem.A, S, problem.objective)))
        norm_c = np.sqrt(sum(np.sum(C * C) for C in problem.objective))
        checks["dual_residual"] = (float(dual / (1 + norm_c)), 10 * tol)
        pobj = sum(np.sum(C * Xb) for C, Xb in zip(problem.objective, X))
        dobj = problem.b @ y
        checks["duality_gap"] = (float(abs(pobj - dobj) / (1 + abs(pobj + problem.objective_offset))),
                                 10 * tol)
        checks["primal_psd"] = (float(max(-np.linalg.eigvalsh(Xb)[0] for Xb in X)), -_EIG_FLOOR)
        checks["dual_psd"] = (float(max(-np.linalg.eigvalsh(Sb)[0] for Sb in S)), -_EIG_FLOOR)
    elif solution.status is Status.PRIMAL_INFEASIBLE:
        y = np.asarray(solution.certificate)
        by = float(problem.b @ y)
        checks["b'y_positive"] = (-by, 0.0)
        for blk, A in enumerate(problem.A):
            lam = float(np.linalg.eigvalsh(np.einsum("m,mij->ij", y / by, A))[-1])
            checks[f"A*y_nsd[{blk}]"] = (lam, tol)
    elif solution.status is Status.DUAL_INFEASIBLE:
        X = solution.certificate
        cx = float(sum(np.sum(C * Xb) for C, Xb in zip(problem.objective, X)))
        checks["c'x_negative"] = (cx, 0.0)
        AX = sum(np.einsum("mij,ij->m", A, Xb) for A, Xb in zip(problem.A, X))
        checks["A(x)_zero"] = (float(np.linalg.norm(AX) / -cx) if cx < 0 else np.inf, tol)
        checks["x_psd"] = (float(max(-np.linalg.eigvalsh(Xb)[0] for Xb in X)), -_EIG_FLOOR)
    else:
        checks["status_has_certificate"] = (1.0, 0.0)
    return CertificateReport(checks)
