"""Ratio tests, the in-solver penalty update and the inexact subproblem loop."""

from __future__ import annotations

import enum
import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .config import SolverConfig
from .dual_cd import (
    CODE_CAP,
    CODE_REDUCE,
    S_BESTJ,
    S_DBEST,
    S_DPEN,
    S_DZ0,
    S_GAP,
    S_NOWORSE,
    DualIterate,
    QpWorkspace,
    _dust_loop,
    dual_value_zero,
)
from .penalty import SubproblemData, linear_model

logger = logging.getLogger(__name__)

WEAK_DUALITY_TOL = 1e-9


class Decision(enum.Enum):
    TERMINATE = "Terminate"
    REDUCE_RHO = "ReduceRho"
    CONTINUE = "Continue"


class DualContractError(RuntimeError):
    """A dual value exceeded the zero-step model value plus the margin."""


@dataclass(frozen=True)
class RatioReport:
    j0: float
    j0_omega: float
    r_v: float
    r_phi: float
    r_c: float
    chi: float
    d_used: np.ndarray
    decision: Decision | None = None


@dataclass
class SubproblemResult:
    d: np.ndarray
    zeta: np.ndarray
    rho_tilde: float
    delta_l0: float
    delta_l_rho: float
    delta_J: float
    inner_iters: int
    rho_reductions: int
    null_step: bool
    cap_hit: bool = False
    lam: np.ndarray | None = None  # best feasibility multipliers seen (kept rows)
    dual_fea: float = -np.inf
    H: object = None  # Hessian model at rho_tilde
    weak_duality_gap: float = -np.inf  # max of D - J over sweeps (should stay <= 0)
    dual_no_worse_violations: int = 0
    reduce_sweeps: list[int] = field(default_factory=list)
    sweep_trace: list[tuple] = field(default_factory=list)


def complementarity_chi(d, zeta, sd: SubproblemData) -> float:
    """Weighted distance of ``d`` to the constraint sets, with weights ``1 -/+ zeta``."""
    r = sd.A @ np.asarray(d, dtype=float) + sd.b  # = |a| (<a_bar, d> + b_bar)
    zeta = np.asarray(zeta, dtype=float)
    me = sd.m_eq
    rE, zE = r[:me], zeta[:me]
    rI, zI = r[me:], zeta[me:]
    chi = np.sum(np.where(rE > 0, (1.0 - zE) * rE, 0.0))
    chi += np.sum(np.where(rE < 0, (1.0 + zE) * -rE, 0.0))
    chi += np.sum(np.where(rI > 0, (1.0 - zI) * rI, 0.0))
    return float(chi)


def compute_ratios(
    d_used, zeta, rho: float, omega: float, sd: SubproblemData, J_d: float, dual_pen: float, dual_w: float
) -> RatioReport:
    """Feasibility, penalty and complementarity ratios for one solver iterate.

    ``J_d`` is ``J(d_used, rho)``, ``dual_pen`` is ``D(zeta, rho)`` and
    ``dual_w`` is ``D(w, 0)`` for the best feasibility multipliers ``w``.
    """
    if omega <= 0:
        raise ValueError("omega must be positive")
    j0 = sd.j0
    j0w = j0 + omega
    l0 = linear_model(d_used, 0.0, sd)
    r_v = (j0w - l0) / (j0w - max(dual_w, 0.0))
    denom = j0w - dual_pen
    if denom <= 0.0:
        raise DualContractError(f"D(zeta, rho)={dual_pen:.6e} reached J0+omega={j0w:.6e}")
    r_phi = (j0w - J_d) / denom
    chi = complementarity_chi(d_used, zeta, sd)
    r_c = 1.0 - math.sqrt(max(chi, 0.0) / j0w)
    return RatioReport(j0, j0w, r_v, r_phi, r_c, chi, np.asarray(d_used))


def dust_decide(report: RatioReport, beta_v: float, beta_phi: float, theta_rho: float, rho: float, rho_min: float = 0.0):
    """Terminate if all three ratio tests pass; lower ``rho`` if only the feasibility test fails.

    A reduction that would go below ``rho_min`` becomes Continue.
    """
    if not 0.0 < beta_v < beta_phi < 1.0:
        raise ValueError("0 < beta_v < beta_phi < 1 is required")
    if not 0.0 < theta_rho < 1.0:
        raise ValueError("theta_rho must lie in (0, 1)")
    ok_phi = report.r_phi >= beta_phi
    ok_c = report.r_c >= beta_v
    ok_v = report.r_v >= beta_v
    if ok_phi and ok_c and ok_v:
        return Decision.TERMINATE, rho
    if ok_phi and ok_c and theta_rho * rho >= rho_min:
        return Decision.REDUCE_RHO, theta_rho * rho
    return Decision.CONTINUE, rho


def solve_subproblem(
    sd: SubproblemData,
    H,
    rho_in: float,
    omega: float,
    warm_zeta=None,
    config: SolverConfig | None = None,
    *,
    to_convergence: bool = False,
    settle_sweeps: int = 50,
    max_sweeps: int | None = None,
) -> SubproblemResult:
    """Run dual coordinate sweeps, applying the ratio tests after each sweep.

    With ``to_convergence`` the Terminate decision is ignored; the loop
    stops once the duality gap has closed and ``settle_sweeps`` sweeps have
    passed since the last penalty reduction (or at the sweep cap). This
    mode exists to study how often the penalty is reduced.
    """
    cfg = config or SolverConfig()
    if rho_in <= 0 or omega <= 0:
        raise ValueError("rho_in and omega must be positive")
    cap = int(max_sweeps or cfg.max_inner_sweeps)
    separate = cfg.feasibility_dual == "separate"
    tracing = cfg.trace_sweeps

    rho = rho_in
    H = H.at(rho)
    order = None
    if cfg.sweep_order == "shuffled":
        order = np.random.default_rng(cfg.sweep_seed).permutation(sd.m)
    ws = QpWorkspace.build(sd, H, rho, order)
    st = DualIterate.start(ws, warm_zeta)
    n = sd.n

    fstate = np.zeros(11)
    fstate[S_DBEST] = st.d_best_w
    fstate[S_DZ0] = dual_value_zero(st.zeta, ws, st.v_zeta)
    fstate[S_GAP] = -np.inf
    fstate[S_BESTJ] = np.inf
    flags = np.array([to_convergence, separate, settle_sweeps, tracing], dtype=np.int64)
    params = np.array([sd.j0, omega, cfg.beta_v, cfg.beta_phi, cfg.theta_rho, cfg.rho_min])
    trace = np.zeros((cap if tracing else 0, 8))
    du = np.zeros(n)
    best_d = np.zeros(n)
    best_z = st.zeta.copy()
    h0s, L0, R0 = ws.h0

    reductions = 0
    reduce_sweeps: list[int] = []
    j_start = 1
    last_reduce = 0
    while True:
        pen, fea = ws.pen, ws.fea
        code, j = _dust_loop(
            j_start, cap, last_reduce, flags, sd.A, sd.b, sd.g, sd.m_eq, ws.lo, ws.hi, ws.ztol,
            ws.sweep_order, params, pen.kind, pen.scale, rho, pen.arrays, fea.kind, fea.scale,
            fea.arrays, h0s, L0, R0, st.zeta, st.v_zeta, st.p_zeta, st.d_zeta, st.lam, st.v_lam,
            st.p_lam, st.d_lam, st.best_w, du, best_d, best_z, fstate, trace,
        )
        if code == CODE_REDUCE:
            rho = cfg.theta_rho * rho
            reductions += 1
            reduce_sweeps.append(int(j))
            last_reduce = j
            H = H.at(rho)
            ws.refresh_penalty(H, rho)
            st.resync(ws)
            fstate[S_BESTJ] = np.inf  # best iterate is tracked per penalty value
            j_start = j + 1
            if j_start > cap:
                code = CODE_CAP
            else:
                continue
        break

    if fstate[S_DPEN] >= sd.j0 + omega:
        raise DualContractError(f"D(zeta, rho)={fstate[S_DPEN]:.6e} reached J0+omega={sd.j0 + omega:.6e}")
    st.d_best_w = float(fstate[S_DBEST])
    cap_hit = code == CODE_CAP
    d_used, zeta = du.copy(), st.zeta.copy()
    if cap_hit:
        logger.warning("subproblem sweep cap %d reached at rho=%.3e", cap, rho)
        if not to_convergence and np.isfinite(fstate[S_BESTJ]):
            d_used, zeta = best_d.copy(), best_z.copy()
    sweep_trace = [tuple(row[:7]) + (_DECISIONS[int(row[7])],) for row in trace[: int(j)]] if tracing else []
    return _finish(
        sd, H, rho, d_used, zeta, st, int(j), reductions, float(fstate[S_GAP]), int(fstate[S_NOWORSE]),
        cap_hit=cap_hit, reduce_sweeps=reduce_sweeps, sweep_trace=sweep_trace,
    )


_DECISIONS = {0: Decision.CONTINUE.value, 1: Decision.TERMINATE.value, 2: Decision.REDUCE_RHO.value}


def _finish(sd, H, rho, d_used, zeta, state, sweeps, reductions, gap, no_worse, cap_hit, **kw) -> SubproblemResult:
    l0 = linear_model(d_used, 0.0, sd)
    delta_l0 = sd.j0 - l0
    delta_l_rho = delta_l0 - rho * float(sd.g @ d_used)
    delta_J = delta_l_rho - 0.5 * float(d_used @ H.matvec(d_used))
    return SubproblemResult(
        d=d_used,
        zeta=zeta,
        rho_tilde=rho,
        delta_l0=delta_l0,
        delta_l_rho=delta_l_rho,
        delta_J=delta_J,
        inner_iters=sweeps,
        rho_reductions=reductions,
        null_step=not np.any(d_used),
        cap_hit=cap_hit,
        lam=state.best_w.copy(),
        dual_fea=state.d_best_w,
        H=H,
        weak_duality_gap=gap,
        dual_no_worse_violations=no_worse,
        **kw,
    )
