"""Penalty SQP outer loop: subproblem, posterior penalty check, line search, termination."""

from __future__ import annotations

import enum
import logging
import math
import time
from dataclasses import dataclass, field

import numpy as np

from .config import SolverConfig
from .dust import SubproblemResult, solve_subproblem
from .hessian import DenseHessian, LowRankHessian, build_exact_modified, lbfgs_update
from .penalty import KktReport, SubproblemData, kkt_errors, violation_terms
from .problems import EvalCounters, NlpProblem, counted

logger = logging.getLogger(__name__)


class Status(enum.Enum):
    CONTINUE = "Continue"
    OPTIMAL = "Optimal"
    INFEASIBLE_STATIONARY = "InfeasibleStationary"
    ITERATION_LIMIT = "IterationLimit"
    LINE_SEARCH_FAILURE = "LineSearchFailure"


class PsstError(RuntimeError):
    """The fallback penalty formula hit a nonpositive denominator."""


@dataclass(frozen=True)
class IterRecord:
    k: int
    rho: float  # penalty used in the line search
    rho_tilde: float  # penalty returned by the subproblem
    omega: float
    alpha: float
    f: float  # at x^k
    v: float
    v_inf: float
    eps_opt: float
    eps_fea: float
    delta_l0: float
    delta_l: float  # model reduction at rho
    delta_J: float
    inner_sweeps: int
    dust_reductions: int
    null_retries: int
    cap_hit: bool
    weak_duality_gap: float
    dual_no_worse_violations: int


@dataclass
class SolveResult:
    status: Status
    x_final: np.ndarray
    f_final: float
    v_final: float
    v_inf_final: float
    eps_opt: float
    eps_fea: float
    rho_final: float
    omega_final: float
    outer_iters: int
    n_f: int
    rho_trajectory: list[tuple[int, float]]
    per_iter_trace: list[IterRecord] = field(default_factory=list)
    eta_final: np.ndarray | None = None
    lam_final: np.ndarray | None = None
    elapsed: float = 0.0
    name: str = ""

    @property
    def kkt(self) -> float:
        """The error measure matching the status: feasibility error for infeasible runs."""
        return self.eps_fea if self.status is Status.INFEASIBLE_STATIONARY else self.eps_opt

    @property
    def max_weak_duality_gap(self) -> float:
        return max((r.weak_duality_gap for r in self.per_iter_trace), default=-np.inf)

    @property
    def cap_hits(self) -> int:
        return sum(r.cap_hit for r in self.per_iter_trace)


def psst_update(rho_tilde: float, d, sd: SubproblemData, H, omega: float, beta_l: float) -> float:
    """Posterior check: keep ``rho_tilde`` if the linear model still predicts enough
    feasibility progress, otherwise lower the penalty so that it does.

    ``H`` is the Hessian model at ``rho_tilde``.
    """
    d = np.asarray(d, dtype=float)
    if not np.any(d):
        return rho_tilde
    r = sd.A @ d + sd.b
    delta_l0 = sd.j0 - float(violation_terms(r, sd.m_eq).sum())
    gd = float(sd.g @ d)
    if delta_l0 - rho_tilde * gd + omega >= beta_l * (delta_l0 + omega):
        return rho_tilde
    Hd = H @ d if isinstance(H, np.ndarray) else H.matvec(d)
    denom = gd + 0.5 * float(d @ Hd)
    if denom <= 0.0:
        raise PsstError(f"nonpositive denominator {denom:.3e} in the penalty fallback")
    return (1.0 - beta_l) * (delta_l0 + omega) / denom


def psst_formula(delta_l0: float, omega: float, gd: float, dHd: float, beta_l: float) -> float:
    """The fallback value ``(1 - beta_l)(dl0 + omega) / (<g,d> + d'Hd / 2)``."""
    return (1.0 - beta_l) * (delta_l0 + omega) / (gd + 0.5 * dHd)


@dataclass(frozen=True)
class LineSearchOutcome:
    alpha: float
    x: np.ndarray
    f: float
    c: np.ndarray
    trials: int
    ok: bool


def line_search(
    p: NlpProblem, x, d, rho: float, delta_l_rho: float, phi0: float,
    gamma_ls: float = 0.5, theta_alpha: float = 1e-4, max_trials: int = 60,
) -> LineSearchOutcome:
    """Backtrack ``alpha = gamma^t`` until the penalty decreases by ``theta * alpha * dl``.

    ``phi0`` is the penalty value at ``x``. Nonfinite trial values are rejected.
    """
    x = np.asarray(x, dtype=float)
    d = np.asarray(d, dtype=float)
    if not np.any(d):
        return LineSearchOutcome(1.0, x, math.nan, np.empty(0), 0, True)
    alpha = 1.0
    for t in range(max_trials):
        xt = x + alpha * d
        ft = float(p.f_eval(xt))
        ct = np.asarray(p.c_eval(xt), dtype=float)
        phit = rho * ft + float(violation_terms(ct, p.m_eq).sum()) if p.m else rho * ft
        if math.isfinite(phit) and phit - phi0 <= -theta_alpha * alpha * delta_l_rho:
            return LineSearchOutcome(alpha, xt, ft, ct, t + 1, True)
        alpha *= gamma_ls
    return LineSearchOutcome(alpha, x, math.nan, np.empty(0), max_trials, False)


def termination_check(
    p: NlpProblem, x, eta, tol_v: float, tol_opt: float, tol_fea: float, eta_fea=None,
    report: KktReport | None = None, tol_infeasible_v: float | None = None,
) -> Status:
    """Optimal, infeasible stationary, or continue.

    Near-feasible points satisfy the feasibility error bound trivially (each
    complementarity term is at most the violation), so infeasibility is only
    declared when ``v_inf`` also exceeds ``tol_infeasible_v`` (default
    ``max(tol_v, tol_fea)``).
    """
    rep = report or kkt_errors(p, x, eta, eta_fea)
    if rep.v_inf <= tol_v:
        return Status.OPTIMAL if rep.eps_opt <= tol_opt else Status.CONTINUE
    floor = max(tol_v, tol_fea) if tol_infeasible_v is None else tol_infeasible_v
    if rep.v_inf > floor and rep.eps_fea <= tol_fea:
        return Status.INFEASIBLE_STATIONARY
    return Status.CONTINUE


class _LbfgsMemory:
    """Curvature pairs for the objective and the multiplier-weighted constraints."""

    def __init__(self, memory: int):
        self.memory = memory
        self.f_pairs: list[tuple[np.ndarray, np.ndarray]] = []
        self.c_pairs: list[tuple[np.ndarray, np.ndarray]] = []

    def push(self, s, g_new, g_old, A_new, A_old, weights):
        self.f_pairs.append((s, g_new - g_old))
        self.c_pairs.append((s, (A_new - A_old).T @ weights))
        # keep a little slack so skipped pairs do not starve the memory
        cap = 2 * self.memory
        del self.f_pairs[:-cap]
        del self.c_pairs[:-cap]

    def model(self, n: int, rho: float) -> LowRankHessian:
        hf = lbfgs_update(self.f_pairs, self.memory, n=n)
        h0 = lbfgs_update(self.c_pairs, self.memory, n=n)
        return LowRankHessian.from_factors(hf, h0, rho)


def _dense_model(p: NlpProblem, x, weights, rho: float, cfg: SolverConfig, counters: EvalCounters) -> DenseHessian:
    Hf = build_exact_modified(p.hess_f(x), cfg.tau_eig, cfg.t_cond)
    H0 = build_exact_modified(p.hess_constraints(x, weights), cfg.tau_eig, cfg.t_cond)
    return DenseHessian(Hf, H0, rho)


def sqp_solve(p: NlpProblem, config: SolverConfig | None = None, x0=None) -> SolveResult:
    """Minimize ``f`` subject to the constraints of ``p`` (or find an infeasible stationary point)."""
    cfg = config or SolverConfig()
    t_start = time.perf_counter()
    p, counters = counted(p)
    x = np.array(p.x0 if x0 is None else x0, dtype=float)
    m = p.m

    rho = cfg.rho_init
    omega = cfg.omega_init
    zeta_full = np.zeros(m)  # penalty-scale QP multipliers (warm start, H_0 weights)
    eta = np.zeros(m)  # Lagrange multiplier estimate
    lam = np.zeros(m)  # feasibility multipliers
    f = float(p.f_eval(x))
    c = np.asarray(p.c_eval(x), dtype=float)
    g = p.grad_f(x)
    A = np.asarray(p.jac_c(x), dtype=float).reshape(m, p.n)
    lbfgs = _LbfgsMemory(cfg.lbfgs_memory) if cfg.hessian_backend == "lbfgs" else None

    trajectory = [(0, rho)]
    trace: list[IterRecord] = []
    status = Status.ITERATION_LIMIT
    rep = kkt_errors(p, x, eta, np.vstack([lam, zeta_full]), c=c, g=g, A=A)
    k = 0
    while True:
        check = termination_check(p, x, eta, cfg.tol_v, cfg.tol_opt, cfg.tol_fea, report=rep, tol_infeasible_v=cfg.tol_infeasible_v)
        if check is not Status.CONTINUE:
            status = check
            break
        if k >= cfg.max_outer:
            status = Status.ITERATION_LIMIT
            break

        sd = SubproblemData.from_arrays(g, A, c, p.m_eq)
        if lbfgs is None:
            H = _dense_model(p, x, zeta_full, rho, cfg, counters)
        else:
            H = lbfgs.model(p.n, rho)

        retries = 0
        sweeps = 0
        reductions = 0
        gap = -np.inf
        no_worse = 0
        cap_hit = False
        while True:
            res: SubproblemResult = solve_subproblem(sd, H, rho, omega, sd.restrict(zeta_full), cfg)
            sweeps += res.inner_iters
            reductions += res.rho_reductions
            gap = max(gap, res.weak_duality_gap)
            no_worse += res.dual_no_worse_violations
            cap_hit |= res.cap_hit
            zeta_full = sd.expand(res.zeta)
            eta = zeta_full / res.rho_tilde
            lam = sd.expand(res.lam)
            rho = res.rho_tilde
            if not res.null_step or retries >= cfg.max_null_retries:
                break
            # null step: the point may already be stationary with the new multipliers
            rep = kkt_errors(p, x, eta, np.vstack([lam, zeta_full]), c=c, g=g, A=A)
            if termination_check(p, x, eta, cfg.tol_v, cfg.tol_opt, cfg.tol_fea, report=rep, tol_infeasible_v=cfg.tol_infeasible_v) is not Status.CONTINUE:
                break
            omega *= cfg.theta_omega
            retries += 1

        if res.null_step:
            rep = kkt_errors(p, x, eta, np.vstack([lam, zeta_full]), c=c, g=g, A=A)
            if termination_check(p, x, eta, cfg.tol_v, cfg.tol_opt, cfg.tol_fea, report=rep, tol_infeasible_v=cfg.tol_infeasible_v) is not Status.CONTINUE:
                trajectory.append((k + 1, rho))
                k += 1
                continue

        d = res.d
        rho_tilde = res.rho_tilde
        rho = psst_update(rho_tilde, d, sd, res.H, omega, cfg.beta_l)
        delta_l = res.delta_l0 - rho * float(sd.g @ d)
        phi0 = rho * f + float(violation_terms(c, p.m_eq).sum())
        ls = line_search(p, x, d, rho, delta_l, phi0, cfg.gamma_ls, cfg.theta_alpha, cfg.max_backtracks)

        trace.append(
            IterRecord(
                k=k, rho=rho, rho_tilde=rho_tilde, omega=omega, alpha=ls.alpha, f=f,
                v=float(violation_terms(c, p.m_eq).sum()), v_inf=rep.v_inf, eps_opt=rep.eps_opt,
                eps_fea=rep.eps_fea, delta_l0=res.delta_l0, delta_l=delta_l, delta_J=res.delta_J,
                inner_sweeps=sweeps, dust_reductions=reductions, null_retries=retries, cap_hit=cap_hit,
                weak_duality_gap=gap, dual_no_worse_violations=no_worse,
            )
        )
        k += 1
        trajectory.append((k, rho))
        if not ls.ok:
            # the fresh multipliers may already certify the current point
            rep = kkt_errors(p, x, eta, np.vstack([lam, zeta_full]), c=c, g=g, A=A)
            check = termination_check(p, x, eta, cfg.tol_v, cfg.tol_opt, cfg.tol_fea, report=rep, tol_infeasible_v=cfg.tol_infeasible_v)
            if check is not Status.CONTINUE:
                status = check
                break
            status = Status.LINE_SEARCH_FAILURE
            logger.warning("%s: line search failed at iteration %d", p.name, k)
            break

        if np.any(d):
            x_new, f, c = ls.x, ls.f, ls.c
            g_new = p.grad_f(x_new)
            A_new = np.asarray(p.jac_c(x_new), dtype=float).reshape(m, p.n)
            if lbfgs is not None:
                lbfgs.push(x_new - x, g_new, g, A_new, A, zeta_full)
            x, g, A = x_new, g_new, A_new
        omega *= cfg.theta_omega
        rep = kkt_errors(p, x, eta, np.vstack([lam, zeta_full]), c=c, g=g, A=A)

    v_vec = violation_terms(c, p.m_eq) if m else np.zeros(0)
    return SolveResult(
        status=status,
        x_final=x,
        f_final=f,
        v_final=float(v_vec.sum()),
        v_inf_final=float(v_vec.max()) if m else 0.0,
        eps_opt=rep.eps_opt,
        eps_fea=rep.eps_fea,
        rho_final=rho,
        omega_final=omega,
        outer_iters=k,
        n_f=counters.n_f,
        rho_trajectory=trajectory,
        per_iter_trace=trace,
        eta_final=eta,
        lam_final=lam,
        elapsed=time.perf_counter() - t_start,
        name=p.name,
    )
