"""Box-constrained dual coordinate ascent for the penalty and feasibility QPs.

For multipliers ``z`` in the box (``[-1, 1]`` on equality rows, ``[0, 1]``
on inequality rows) the dual of ``min_d rho <g,d> + sum viol(A d + b) +
1/2 d'Hd`` is

    D(z, rho) = -1/2 (A'z + rho g)' H^{-1} (A'z + rho g) + z'b,

with primal recovery ``d = -H^{-1}(A'z + rho g)``. ``rho = 0`` uses ``H_0``.

Each coordinate step maximizes ``D`` exactly along one multiplier and clips
to the box. The kernels keep ``v = A'z`` plus either ``d`` (dense backend,
using precomputed rows ``H^{-1} a_i``) or ``p = T'v`` (low-rank backend,
where ``H^{-1} = (I - U T') / s``), so each step costs O(n) or O(n + rank).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numba
import numpy as np

from .hessian import DenseHessian, LowRankHessian
from .penalty import SubproblemData, violation_terms

ZERO_DIAG_RTOL = 1e-14
DENSE, LOWRANK = 0, 1

_EMPTY2 = np.zeros((0, 0))
_EMPTY1 = np.zeros(0)


# --------------------------------------------------------------------------
# numba kernels


@numba.njit(cache=True)
def _mid_step(value, partial, diag, ztol, lo, hi):
    if abs(diag) < ztol:
        if partial > 0.0:
            return hi
        if partial < 0.0:
            return lo
        return value
    new = value + partial / diag
    if new < lo:
        return lo
    if new > hi:
        return hi
    return new


@numba.njit(cache=True)
def _sweep_dense(mult, v, d, A, b, Wt, diag, ztol, lo, hi, order):
    n = A.shape[1]
    for i in order:
        part = b[i]
        for k in range(n):
            part += A[i, k] * d[k]
        new = _mid_step(mult[i], part, diag[i], ztol[i], lo[i], hi[i])
        delta = new - mult[i]
        if delta != 0.0:
            mult[i] = new
            for k in range(n):
                d[k] -= delta * Wt[i, k]
                v[k] += delta * A[i, k]


@numba.njit(cache=True)
def _sweep_lowrank(mult, v, p, A, b, Q, Qt, diag, ztol, lo, hi, order, scale, rho, ag, pg):
    n = A.shape[1]
    r = Q.shape[1]
    for i in order:
        ay = rho * ag[i]
        for k in range(n):
            ay += A[i, k] * v[k]
        qy = 0.0
        for k in range(r):
            qy += Q[i, k] * (rho * pg[k] + p[k])
        part = b[i] - (ay - qy) / scale
        new = _mid_step(mult[i], part, diag[i], ztol[i], lo[i], hi[i])
        delta = new - mult[i]
        if delta != 0.0:
            mult[i] = new
            for k in range(n):
                v[k] += delta * A[i, k]
            for k in range(r):
                p[k] += delta * Qt[i, k]


@numba.njit(cache=True)
def _side_sweep(kind, scale, rho, S, mult, v, p, d, A, b, ztol, lo, hi, order):
    diag, Wt, Wg, Q, Qt, U, T, ag, pg = S
    if kind == DENSE:
        _sweep_dense(mult, v, d, A, b, Wt, diag, ztol, lo, hi, order)
    else:
        _sweep_lowrank(mult, v, p, A, b, Q, Qt, diag, ztol, lo, hi, order, scale, rho, ag, pg)


@numba.njit(cache=True)
def _side_step(kind, scale, rho, S, mult, v, p, g, out):
    """``out = -H^{-1}(rho g + v)`` from the caches."""
    diag, Wt, Wg, Q, Qt, U, T, ag, pg = S
    n = out.shape[0]
    if kind == DENSE:
        for k in range(n):
            out[k] = -rho * Wg[k]
        for i in range(mult.shape[0]):
            z = mult[i]
            if z != 0.0:
                for k in range(n):
                    out[k] -= z * Wt[i, k]
    else:
        r = U.shape[1]
        for k in range(n):
            acc = rho * g[k] + v[k]
            for t in range(r):
                acc -= U[k, t] * (rho * pg[t] + p[t])
            out[k] = -acc / scale


@numba.njit(cache=True)
def _cache_p(kind, S, v, p):
    diag, Wt, Wg, Q, Qt, U, T, ag, pg = S
    if kind == LOWRANK:
        for t in range(T.shape[1]):
            acc = 0.0
            for k in range(T.shape[0]):
                acc += T[k, t] * v[k]
            p[t] = acc


@numba.njit(cache=True)
def _viol_sum(A, b, d, m_eq, zero_step):
    """``sum viol(A d + b)``; with ``zero_step`` just ``sum viol(b)``."""
    m, n = A.shape
    tot = 0.0
    for i in range(m):
        r = b[i]
        if not zero_step:
            for k in range(n):
                r += A[i, k] * d[k]
        if i < m_eq:
            tot += abs(r)
        elif r > 0.0:
            tot += r
    return tot


@numba.njit(cache=True)
def _chi(A, b, d, zeta, m_eq, zero_step):
    m, n = A.shape
    tot = 0.0
    for i in range(m):
        r = b[i]
        if not zero_step:
            for k in range(n):
                r += A[i, k] * d[k]
        if r > 0.0:
            tot += (1.0 - zeta[i]) * r
        elif r < 0.0 and i < m_eq:
            tot += (1.0 + zeta[i]) * -r
    return tot


@numba.njit(cache=True)
def _h0_quad(h0s, L0, R0, d):
    """``d' H_0 d`` with ``H_0 = h0s I + L0 R0'``."""
    n = d.shape[0]
    out = h0s * (d @ d)
    for t in range(R0.shape[1]):
        a = 0.0
        c = 0.0
        for k in range(n):
            a += R0[k, t] * d[k]
            c += L0[k, t] * d[k]
        out += a * c
    return out


@numba.njit(cache=True)
def _dot(a, b):
    acc = 0.0
    for k in range(a.shape[0]):
        acc += a[k] * b[k]
    return acc


@numba.njit(cache=True)
def _dual_value(v, d, mult, b, rho, g):
    """``D = 1/2 (v + rho g)'d + mult'b`` given ``d = -H^{-1}(v + rho g)``."""
    acc = 0.0
    for k in range(d.shape[0]):
        acc += (v[k] + rho * g[k]) * d[k]
    return 0.5 * acc + _dot(mult, b)


# Loop exit codes
CODE_CAP, CODE_TERMINATE, CODE_REDUCE, CODE_SETTLED = 0, 1, 2, 3
# Slots of the shared float state
S_DBEST, S_DZ0, S_GAP, S_NOWORSE, S_BESTJ, S_JD, S_DPEN, S_DFEA, S_RV, S_RPHI, S_RC = range(11)


@numba.njit(cache=True)
def _dust_loop(
    j_start, cap, last_reduce, flags, A, b, g, m_eq, lo, hi, ztol, order, params,
    pk, pscale, rho, PS, fk, fscale, FS, h0s, L0, R0,
    zeta, vz, pz, dz, lam, vl, pl, dl, best_w, du, best_d, best_z, fstate, trace,
):
    """Sweep both duals and evaluate the ratio tests until a decision needs Python.

    ``flags = (to_convergence, separate, settle_sweeps, tracing)``;
    ``params = (j0, omega, beta_v, beta_phi, theta_rho, rho_min)``; a reduction
    that would take ``rho`` below ``rho_min`` is turned into Continue.
    """
    to_conv, separate, settle, tracing = flags[0], flags[1], flags[2], flags[3]
    j0, omega, beta_v, beta_phi = params[0], params[1], params[2], params[3]
    can_reduce = params[4] * rho >= params[5]
    j0w = j0 + omega
    n = g.shape[0]
    dtmp = np.empty(n)
    zero_g = np.zeros(n)
    j = j_start
    while j <= cap:
        # penalty dual
        _side_sweep(pk, pscale, rho, PS, zeta, vz, pz, dz, A, b, ztol, lo, hi, order)
        _side_step(pk, pscale, rho, PS, zeta, vz, pz, g, dz)
        dual_pen = _dual_value(vz, dz, zeta, b, rho, g)
        quad = 0.0
        for k in range(n):
            quad -= dz[k] * (vz[k] + rho * g[k])
        nonzero = False
        for k in range(n):
            if dz[k] != 0.0:
                nonzero = True
                break
        J_d = rho * _dot(g, dz) + _viol_sum(A, b, dz, m_eq, False) + 0.5 * quad
        if J_d <= j0 and nonzero:
            for k in range(n):
                du[k] = dz[k]
            zero_step = False
            l0 = _viol_sum(A, b, du, m_eq, False)
            J_used0 = l0 + 0.5 * _h0_quad(h0s, L0, R0, du)
        else:
            for k in range(n):
                du[k] = 0.0
            zero_step = True
            J_d = j0
            l0 = j0
            J_used0 = j0

        # feasibility dual
        if separate:
            _side_sweep(fk, fscale, 0.0, FS, lam, vl, pl, dl, A, b, ztol, lo, hi, order)
            _side_step(fk, fscale, 0.0, FS, lam, vl, pl, zero_g, dl)
            dual_fea = _dual_value(vl, dl, lam, b, 0.0, zero_g)
            if dual_fea > fstate[S_DBEST]:
                fstate[S_DBEST] = dual_fea
                best_w[:] = lam
        # D(zeta, 0): the multiplier-reuse candidate and the no-worse monitor
        ptmp = np.empty(pl.shape[0])
        _cache_p(fk, FS, vz, ptmp)
        _side_step(fk, fscale, 0.0, FS, zeta, vz, ptmp, zero_g, dtmp)
        dz_zero = _dual_value(vz, dtmp, zeta, b, 0.0, zero_g)
        if not separate:
            dual_fea = dz_zero
            if dual_fea > fstate[S_DBEST]:
                fstate[S_DBEST] = dual_fea
                best_w[:] = zeta
        if dz_zero < fstate[S_DZ0] - 1e-12:
            fstate[S_NOWORSE] += 1.0
        dbest = fstate[S_DBEST]

        gap = max(dual_pen - J_d, dbest - J_used0)
        if gap > fstate[S_GAP]:
            fstate[S_GAP] = gap

        # ratio tests
        r_v = (j0w - l0) / (j0w - max(dbest, 0.0))
        denom = j0w - dual_pen
        if denom <= 0.0:
            r_phi = np.inf  # flagged by the caller through the weak-duality gap
        else:
            r_phi = (j0w - J_d) / denom
        chi = _chi(A, b, du, zeta, m_eq, zero_step)
        r_c = 1.0 - np.sqrt(max(chi, 0.0) / j0w)
        ok_phi = r_phi >= beta_phi
        ok_c = r_c >= beta_v
        ok_v = r_v >= beta_v
        decision = 0  # continue
        if ok_phi and ok_c and ok_v:
            decision = 1
        elif ok_phi and ok_c and can_reduce:
            decision = 2

        fstate[S_JD] = J_d
        fstate[S_DPEN] = dual_pen
        fstate[S_DFEA] = dual_fea
        fstate[S_RV] = r_v
        fstate[S_RPHI] = r_phi
        fstate[S_RC] = r_c
        if tracing and j - 1 < trace.shape[0]:
            row = trace[j - 1]
            row[0] = j
            row[1] = rho
            row[2] = r_v
            row[3] = r_phi
            row[4] = r_c
            row[5] = J_d
            row[6] = dual_pen
            row[7] = decision
        if J_d < fstate[S_BESTJ]:
            fstate[S_BESTJ] = J_d
            best_d[:] = du
            best_z[:] = zeta

        if to_conv:
            if decision == 2:
                return CODE_REDUCE, j
            if J_d - dual_pen <= 1e-10 * max(1.0, abs(J_d)) and j - last_reduce >= settle:
                return CODE_SETTLED, j
        else:
            if decision == 1:
                return CODE_TERMINATE, j
            if decision == 2:
                return CODE_REDUCE, j
        j += 1
    return CODE_CAP, cap


# --------------------------------------------------------------------------
# Python-side data


@dataclass
class DualSide:
    """Operator data for one dual problem (penalty at ``rho`` or feasibility at 0)."""

    rho: float
    kind: int
    scale: float
    arrays: tuple  # (diag, Wt, Wg, Q, Qt, U, T, ag, pg)

    @classmethod
    def build(cls, sd: SubproblemData, H, rho: float) -> "DualSide":
        zero = rho == 0.0
        c = np.ascontiguousarray
        if isinstance(H, DenseHessian):
            Wt = c(H.solve(sd.A.T, zero).T) if sd.m else np.zeros((0, sd.n))
            Wg = c(H.solve(sd.g, zero))
            diag = c(np.einsum("ij,ij->i", sd.A, Wt))
            return cls(rho, DENSE, 1.0, (diag, Wt, Wg, _EMPTY2, _EMPTY2, _EMPTY2, _EMPTY2, _EMPTY1, _EMPTY1))
        if isinstance(H, LowRankHessian):
            op = H.inverse_operator(zero)
            U, T = c(op.U), c(op.T)
            Q = c(sd.A @ U)
            Qt = c(sd.A @ T)
            diag = c((np.einsum("ij,ij->i", sd.A, sd.A) - np.einsum("ij,ij->i", Q, Qt)) / op.scale)
            arrays = (diag, _EMPTY2, _EMPTY1, Q, Qt, U, T, c(sd.A @ sd.g), c(T.T @ sd.g))
            return cls(rho, LOWRANK, float(op.scale), arrays)
        raise TypeError(f"unsupported Hessian model {type(H).__name__}")

    @property
    def diag(self) -> np.ndarray:
        return self.arrays[0]

    @property
    def rank(self) -> int:
        return self.arrays[5].shape[1] if self.kind == LOWRANK else 0

    def cache_p(self, v: np.ndarray) -> np.ndarray:
        p = np.zeros(self.rank)
        _cache_p(self.kind, self.arrays, v, p)
        return p

    def step(self, mult, v, p, g) -> np.ndarray:
        out = np.empty(g.size)
        _side_step(self.kind, self.scale, self.rho, self.arrays, mult, v, p, g, out)
        return out


@dataclass
class QpWorkspace:
    """Per-subproblem data shared by all sweeps: both dual sides and the sweep order."""

    sd: SubproblemData
    pen: DualSide
    fea: DualSide
    ztol: np.ndarray
    sweep_order: np.ndarray
    lo: np.ndarray
    hi: np.ndarray
    h0: tuple  # (scalar, L0, R0) with H_0 = scalar I + L0 R0'

    @classmethod
    def build(cls, sd: SubproblemData, H, rho: float, order=None) -> "QpWorkspace":
        ztol = ZERO_DIAG_RTOL * (1.0 + np.einsum("ij,ij->i", sd.A, sd.A))
        order = np.arange(sd.m, dtype=np.int64) if order is None else np.asarray(order, dtype=np.int64)
        if isinstance(H, DenseHessian):
            h0 = (0.0, np.ascontiguousarray(H.H0), np.eye(sd.n))
        else:
            L0 = H.Phi @ np.linalg.inv(H.Gamma) if H.Phi.shape[1] else np.zeros((sd.n, 0))
            h0 = (float(H.gamma), np.ascontiguousarray(L0), np.ascontiguousarray(H.Phi))
        return cls(
            sd, DualSide.build(sd, H.at(rho), rho), DualSide.build(sd, H, 0.0), ztol, order,
            np.ascontiguousarray(sd.lower), np.ascontiguousarray(sd.upper), h0,
        )

    def refresh_penalty(self, H, rho: float) -> None:
        """Rebuild the penalty-side operator after ``rho`` changes."""
        self.pen = DualSide.build(self.sd, H.at(rho), rho)

    @property
    def rho(self) -> float:
        return self.pen.rho


@dataclass
class DualIterate:
    """Penalty multipliers ``zeta``, feasibility multipliers ``lam`` and their caches."""

    zeta: np.ndarray
    lam: np.ndarray
    v_zeta: np.ndarray
    v_lam: np.ndarray
    p_zeta: np.ndarray = field(default_factory=lambda: np.zeros(0))
    p_lam: np.ndarray = field(default_factory=lambda: np.zeros(0))
    d_zeta: np.ndarray = field(default_factory=lambda: np.zeros(0))
    d_lam: np.ndarray = field(default_factory=lambda: np.zeros(0))
    best_w: np.ndarray = field(default_factory=lambda: np.zeros(0))
    d_best_w: float = -np.inf

    @classmethod
    def start(cls, ws: QpWorkspace, zeta0=None, lam0=None) -> "DualIterate":
        """Warm start: ``zeta0`` clipped to the box, ``lam`` from ``lam0`` or zero.

        The best feasibility multipliers start as whichever of the two has
        the larger feasibility dual value.
        """
        sd = ws.sd
        zeta = np.zeros(sd.m) if zeta0 is None else np.clip(np.asarray(zeta0, dtype=float), ws.lo, ws.hi)
        lam = np.zeros(sd.m) if lam0 is None else np.clip(np.asarray(lam0, dtype=float), ws.lo, ws.hi)
        state = cls(zeta=zeta, lam=lam, v_zeta=sd.A.T @ zeta, v_lam=sd.A.T @ lam)
        state.resync(ws)
        dz = dual_value_zero(zeta, ws, state.v_zeta)
        dl = dual_value_zero(lam, ws, state.v_lam)
        if dz > dl:
            state.best_w, state.d_best_w = zeta.copy(), dz
        else:
            state.best_w, state.d_best_w = lam.copy(), dl
        return state

    def resync(self, ws: QpWorkspace) -> None:
        """Recompute every H-dependent cache from the multipliers."""
        g = ws.sd.g
        self.p_zeta = ws.pen.cache_p(self.v_zeta)
        self.p_lam = ws.fea.cache_p(self.v_lam)
        self.d_zeta = ws.pen.step(self.zeta, self.v_zeta, self.p_zeta, g)
        self.d_lam = ws.fea.step(self.lam, self.v_lam, self.p_lam, g)

    def copy(self) -> "DualIterate":
        return DualIterate(
            self.zeta.copy(), self.lam.copy(), self.v_zeta.copy(), self.v_lam.copy(),
            self.p_zeta.copy(), self.p_lam.copy(), self.d_zeta.copy(), self.d_lam.copy(),
            self.best_w.copy(), self.d_best_w,
        )


def _apply_inverse(H, rho: float, z):
    if rho == 0.0:
        return H.solve(z, zero=True)
    return H.at(rho).solve(z)


def dual_objective(mult, rho: float, sd: SubproblemData, H) -> float:
    """``D(mult, rho)``; ``rho = 0`` evaluates the feasibility dual with ``H_0``."""
    mult = np.asarray(mult, dtype=float)
    y = sd.A.T @ mult + rho * sd.g
    return float(-0.5 * y @ _apply_inverse(H, rho, y) + mult @ sd.b)


def primal_recover(mult, rho: float, sd: SubproblemData, H) -> np.ndarray:
    """``d = -H_rho^{-1}(rho g + A' mult)``."""
    mult = np.asarray(mult, dtype=float)
    return -_apply_inverse(H, rho, sd.A.T @ mult + rho * sd.g)


def dual_value_zero(mult, ws: QpWorkspace, v=None) -> float:
    """``D(mult, 0)`` using the workspace's feasibility operator."""
    mult = np.asarray(mult, dtype=float)
    v = ws.sd.A.T @ mult if v is None else v
    d = ws.fea.step(mult, v, ws.fea.cache_p(v), np.zeros(ws.sd.n))
    return float(0.5 * v @ d + mult @ ws.sd.b)


def coordinate_update(i: int, state: DualIterate, ws: QpWorkspace, which: str = "zeta") -> float:
    """Exactly maximize the chosen dual along coordinate ``i``; returns the new value."""
    order = np.array([i], dtype=np.int64)
    side = ws.pen if which == "zeta" else ws.fea
    if which == "zeta":
        mult, v, p, d = state.zeta, state.v_zeta, state.p_zeta, state.d_zeta
    else:
        mult, v, p, d = state.lam, state.v_lam, state.p_lam, state.d_lam
    _side_sweep(side.kind, side.scale, side.rho, side.arrays, mult, v, p, d, ws.sd.A, ws.sd.b, ws.ztol, ws.lo, ws.hi, order)
    if side.kind == LOWRANK:
        d[:] = side.step(mult, v, p, ws.sd.g)
    return float(mult[i])


@dataclass(frozen=True)
class SweepInfo:
    d: np.ndarray  # primal step recovered from zeta
    dual_pen: float  # D(zeta, rho)
    dual_fea: float  # D(lam, 0)
    quad: float  # d' H_rho d


def sweep(state: DualIterate, ws: QpWorkspace, feasibility: bool = True) -> SweepInfo:
    """One ascending pass over all coordinates of ``zeta`` (and of ``lam``).

    With ``feasibility=False`` the feasibility dual is not iterated; ``zeta``
    then doubles as a candidate for the best feasibility multipliers.
    """
    sd = ws.sd
    pen, fea = ws.pen, ws.fea
    _side_sweep(pen.kind, pen.scale, pen.rho, pen.arrays, state.zeta, state.v_zeta, state.p_zeta,
                state.d_zeta, sd.A, sd.b, ws.ztol, ws.lo, ws.hi, ws.sweep_order)
    d = pen.step(state.zeta, state.v_zeta, state.p_zeta, sd.g)
    state.d_zeta = d
    y = state.v_zeta + pen.rho * sd.g
    quad = float(-(d @ y))
    dual_pen = 0.5 * float(y @ d) + float(state.zeta @ sd.b)

    if feasibility:
        _side_sweep(fea.kind, fea.scale, 0.0, fea.arrays, state.lam, state.v_lam, state.p_lam,
                    state.d_lam, sd.A, sd.b, ws.ztol, ws.lo, ws.hi, ws.sweep_order)
        state.d_lam = fea.step(state.lam, state.v_lam, state.p_lam, np.zeros(sd.n))
        dual_fea = 0.5 * float(state.v_lam @ state.d_lam) + float(state.lam @ sd.b)
        candidate = state.lam
    else:
        dual_fea = dual_value_zero(state.zeta, ws, state.v_zeta)
        candidate = state.zeta
    if dual_fea > state.d_best_w:
        state.best_w = candidate.copy()
        state.d_best_w = dual_fea
    return SweepInfo(d=d, dual_pen=dual_pen, dual_fea=dual_fea, quad=quad)


def model_value(d, rho: float, sd: SubproblemData, quad: float) -> float:
    """``J(d, rho) = rho <g,d> + sum viol(A d + b) + quad / 2`` with ``quad = d'H_rho d``."""
    r = sd.A @ d + sd.b
    return float(rho * (sd.g @ d) + violation_terms(r, sd.m_eq).sum() + 0.5 * quad)


def sufficient_dual_pair(d, rho: float, sd: SubproblemData, H, quad: float | None = None):
    """Return ``(d, J(d, rho))`` if the step beats the zero step, else ``(0, J(0, rho))``."""
    d = np.asarray(d, dtype=float)
    if quad is None:
        quad = float(d @ H.at(rho).matvec(d)) if rho > 0 else float(d @ H.matvec(d, zero=True))
    J = model_value(d, rho, sd, quad)
    if J <= sd.j0 and np.any(d):
        return d, J
    return np.zeros_like(d), sd.j0
