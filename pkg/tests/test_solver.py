import math
from fractions import Fraction

import numpy as np
import pytest

from dustsqp.config import ConfigError, SolverConfig
from dustsqp.penalty import SubproblemData
from dustsqp.problems import NlpProblem, get_problem, random_convex_problem
from dustsqp.solver import (
    PsstError,
    Status,
    line_search,
    psst_formula,
    psst_update,
    sqp_solve,
    termination_check,
)


def _unconstrained(f, g, n=1):
    return NlpProblem(
        "uc", n, 0, 0,
        f_eval=f, c_eval=lambda x: np.zeros(0), grad_f=g,
        jac_c=lambda x: np.zeros((0, n)), hess_f=lambda x: np.eye(n),
        hess_c=lambda x, i: np.zeros((n, n)), x0=np.zeros(n),
    )


def _psst_instance():
    # d = 1, g = 2, H = 1 and a single equality -d + 1 = 0, so dl(d, 0) = 1
    return SubproblemData.from_arrays([2.0], [[-1.0]], [1.0], 1), np.eye(1)


def test_psst_fallback_example():
    sd, H = _psst_instance()
    rho = psst_update(0.5, [1.0], sd, H, 0.01, 0.378)
    exact = (1 - Fraction("0.378")) * Fraction("1.01") / Fraction("2.5")
    assert rho == pytest.approx(float(exact), abs=1e-7)
    assert psst_formula(1.0, 0.01, 2.0, 1.0, 0.378) == pytest.approx(float(exact), rel=1e-15)
    # the post-condition now holds
    assert 1.0 - rho * 2.0 + 0.01 >= 0.378 * 1.01


def test_psst_keeps_rho_when_condition_holds():
    sd, H = _psst_instance()
    assert psst_update(0.1, [1.0], sd, H, 0.01, 0.378) == 0.1
    assert psst_update(0.7, [0.0], sd, H, 0.01, 0.378) == 0.7


def test_psst_nonpositive_denominator_is_an_error():
    # the step raises the violation (dl(d, 0) = -1) while <g, d> + d'Hd/2 < 0
    sd = SubproblemData.from_arrays([-0.1], [[1.0]], [0.0], 1)
    with pytest.raises(PsstError):
        psst_update(1.0, [1.0], sd, 0.1 * np.eye(1), 0.01, 0.378)


def test_line_search_null_step():
    p = _unconstrained(lambda x: float(x[0] ** 2), lambda x: 2 * x)
    out = line_search(p, [2.0], [0.0], 1.0, 0.0, 4.0)
    assert out.alpha == 1.0 and out.ok and out.trials == 0


def test_line_search_newton_step_on_quadratic():
    p = _unconstrained(lambda x: float(0.5 * x[0] ** 2), lambda x: x)
    out = line_search(p, [2.0], [-2.0], 1.0, 4.0, 2.0)
    assert out.alpha == 1.0 and out.trials == 1
    assert out.x == pytest.approx([0.0])


def test_line_search_backtracks_on_quartic():
    p = _unconstrained(lambda x: float(x[0] ** 4), lambda x: 4 * x**3)
    dl = 40.0  # -rho <g, d> with g = 4, d = -10
    out = line_search(p, [1.0], [-10.0], 1.0, dl, 1.0)
    assert out.ok and out.alpha < 0.5
    # independent Armijo check of every trial
    for t in range(out.trials):
        a = 0.5**t
        holds = (1 - 10 * a) ** 4 - 1.0 <= -1e-4 * a * dl
        assert holds == (a == out.alpha)


def test_line_search_rejects_nonfinite_trials():
    p = _unconstrained(lambda x: math.inf if x[0] < -0.5 else float(x[0] ** 2), lambda x: 2 * x)
    out = line_search(p, [1.0], [-2.0], 1.0, 4.0, 1.0)
    assert out.ok and out.alpha == 0.5


def test_line_search_failure_after_cap():
    p = _unconstrained(lambda x: float(x[0]), lambda x: np.ones(1))
    out = line_search(p, [0.0], [1.0], 1.0, 1.0, 0.0, max_trials=5)
    assert not out.ok and out.trials == 5


def test_termination_examples():
    p = get_problem("hs28")
    x_star = np.array([0.5, -0.5, 0.5])
    g = p.grad_f(x_star)
    a = p.jac_c(x_star)[0]
    eta = np.array([-(g @ a) / (a @ a)])
    assert termination_check(p, x_star, eta, 1e-5, 1e-4, 1e-4) is Status.OPTIMAL
    hs11 = get_problem("hs11")
    assert termination_check(hs11, hs11.x0, np.zeros(1), 1e-5, 1e-4, 1e-4) is Status.CONTINUE


def test_termination_on_contradictory_pair():
    zero = np.zeros((1, 1))
    p = NlpProblem(
        "pair", 1, 2, 0, f_eval=lambda x: float(x[0]), c_eval=lambda x: np.array([x[0], 1.0 - x[0]]),
        grad_f=lambda x: np.ones(1), jac_c=lambda x: np.array([[1.0], [-1.0]]),
        hess_f=lambda x: zero, hess_c=lambda x, i: zero, x0=np.array([0.5]),
    )
    x = np.array([0.5])
    assert termination_check(p, x, np.zeros(2), 1e-5, 1e-4, 1e-4, eta_fea=np.ones(2)) is Status.INFEASIBLE_STATIONARY
    assert termination_check(p, x, np.zeros(2), 1e-5, 1e-4, 1e-4, eta_fea=np.zeros(2)) is Status.CONTINUE


@pytest.mark.parametrize("name", ["hs28", "hs11", "hs43"])
def test_driver_invariants(name, default_runs):
    r = default_runs[name]
    cfg = SolverConfig()
    assert r.status is Status.OPTIMAL
    assert r.v_inf_final <= cfg.tol_v and r.eps_opt <= cfg.tol_opt
    rhos = [rho for _, rho in r.rho_trajectory]
    assert all(b <= a for a, b in zip(rhos, rhos[1:]))
    recs = r.per_iter_trace
    for prev, cur in zip(recs, recs[1:]):
        assert cur.omega == pytest.approx(prev.omega * cfg.theta_omega ** (1 + cur.null_retries), rel=1e-14)
    # Armijo inequality at every accepted step, rechecked from the recorded values
    ends = [(rec.f, rec.v) for rec in recs[1:]] + [(r.f_final, r.v_final)]
    for rec, (f_next, v_next) in zip(recs, ends):
        if rec.delta_l0 == 0.0 and rec.delta_l == 0.0:
            continue
        lhs = rec.rho * f_next + v_next - (rec.rho * rec.f + rec.v)
        assert lhs <= -cfg.theta_alpha * rec.alpha * rec.delta_l + 1e-12 * max(1.0, abs(rec.rho * rec.f + rec.v))


def test_hs28_example(default_runs):
    r = default_runs["hs28"]
    assert r.f_final <= 1e-6
    assert r.rho_final == 1.0
    assert r.outer_iters <= 3


def test_hs11_example(default_runs):
    r = default_runs["hs11"]
    assert r.f_final == pytest.approx(-8.498465, abs=1e-4)


def test_hs11_inf_example(default_runs):
    r = default_runs["hs11_inf"]
    assert r.status is Status.INFEASIBLE_STATIONARY
    assert r.v_final == pytest.approx(1.0, abs=1e-4)
    assert r.v_inf_final > 1e-5 and r.eps_fea <= 1e-4


def test_lbfgs_backend_small():
    r = sqp_solve(get_problem("hs35"), SolverConfig(hessian_backend="lbfgs"))
    assert r.status is Status.OPTIMAL
    assert r.f_final == pytest.approx(1.0 / 9.0, abs=1e-4)


def test_iteration_limit_status():
    r = sqp_solve(get_problem("hs11"), SolverConfig(max_outer=1))
    assert r.status is Status.ITERATION_LIMIT and r.outer_iters == 1


def test_custom_start_point():
    p = get_problem("hs28")
    r = sqp_solve(p, x0=np.zeros(3))
    assert r.status is Status.OPTIMAL


def test_weak_duality_is_tracked(default_runs):
    for r in default_runs.values():
        assert r.max_weak_duality_gap <= 1e-9


def test_config_validation():
    with pytest.raises(ConfigError):
        SolverConfig(beta_v=0.9, beta_phi=0.5)
    with pytest.raises(ConfigError):
        SolverConfig(beta_l=0.7)
    with pytest.raises(ConfigError):
        SolverConfig(hessian_backend="newton")
    cfg = SolverConfig()
    assert cfg.beta_l == pytest.approx(0.378)
    assert cfg.replace(beta_phi=0.99).beta_phi == 0.99


def test_medium_random_problem_small_instance():
    p = random_convex_problem(n=60, m=30, m_eq=10, seed=1)
    r = sqp_solve(p, SolverConfig(hessian_backend="lbfgs", max_inner_sweeps=2000, max_outer=500))
    assert r.status is Status.OPTIMAL
