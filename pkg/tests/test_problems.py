import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dustsqp.penalty import violation
from dustsqp.problems import (
    KNOWN_OPTIMA,
    NlpProblem,
    available_problems,
    check_derivatives,
    counted,
    feasible_names,
    get_problem,
    make_infeasible,
    random_convex_problem,
)

REQUIRED = ["hs11", "hs14", "hs21", "hs28", "hs32", "hs35", "hs41", "hs43", "hs48",
            "hs51", "hs52", "hs61", "hs76", "hs100", "hs113"]


def test_registry_covers_required_set():
    names = available_problems()
    for name in REQUIRED:
        assert name in names
        assert name + "_inf" in names


@pytest.mark.parametrize("name,n,m,m_eq", [("hs28", 3, 1, 1), ("hs11", 2, 1, 0)])
def test_dimensions(name, n, m, m_eq):
    p = get_problem(name)
    assert (p.n, p.m, p.m_eq) == (n, m, m_eq)


def test_unknown_name_lists_alternatives():
    with pytest.raises(KeyError, match="hs28"):
        get_problem("nosuch")


@pytest.mark.parametrize("name", REQUIRED + [n + "_inf" for n in REQUIRED])
def test_derivatives_at_start(name):
    p = get_problem(name)
    assert check_derivatives(p, p.x0, 1e-6) <= 1e-5


def test_derivative_checker_exact_on_quadratic():
    p = get_problem("hs35")  # quadratic objective, linear constraints
    assert check_derivatives(p, p.x0, 1e-5) <= 1e-9


def test_derivative_checker_catches_wrong_gradient():
    p = get_problem("hs28")
    bad = NlpProblem(p.name, p.n, p.m, p.m_eq, p.f_eval, p.c_eval,
                     lambda x: p.grad_f(x) + np.eye(p.n)[0], p.jac_c, p.hess_f, p.hess_c, p.x0)
    err = check_derivatives(bad, bad.x0, 1e-6)
    g0 = abs(p.grad_f(p.x0)[0] + 1.0)
    assert err == pytest.approx(1.0 / max(1.0, g0), rel=1e-4)


def test_hessians_match_finite_differences():
    for name in REQUIRED:
        p = get_problem(name)
        x = p.x0 + 0.1
        h = 1e-6
        H = p.hess_f(x)
        fd = np.column_stack([(p.grad_f(x + h * e) - p.grad_f(x - h * e)) / (2 * h) for e in np.eye(p.n)])
        assert np.allclose(H, fd, atol=1e-4 * max(1.0, np.abs(H).max())), name
        for i in range(p.m):
            Hc = p.hess_c(x, i)
            fdc = np.column_stack([(p.jac_c(x + h * e)[i] - p.jac_c(x - h * e)[i]) / (2 * h) for e in np.eye(p.n)])
            assert np.allclose(Hc, fdc, atol=1e-4 * max(1.0, np.abs(Hc).max())), (name, i)


@pytest.mark.parametrize("name", REQUIRED)
def test_known_optimum_is_consistent(name):
    # the solver's optimum agrees with the literature value
    from dustsqp.solver import sqp_solve

    r = sqp_solve(get_problem(name))
    assert r.f_final == pytest.approx(KNOWN_OPTIMA[name], abs=1e-4 * max(1.0, abs(KNOWN_OPTIMA[name])))


def test_make_infeasible_appends_two_rows():
    p = get_problem("hs11")
    q = make_infeasible(p)
    assert (q.m, q.m_eq, q.name) == (p.m + 2, p.m_eq, "hs11_inf")
    c = q.c_eval(np.array([0.5, 0.0]))
    assert c[-2:] == pytest.approx([0.5, 0.5])
    c = q.c_eval(np.array([0.0, 0.0]))
    assert c[-2:] == pytest.approx([0.0, 1.0])


def test_make_infeasible_replaces_bounds_on_first_variable():
    p = get_problem("hs21")  # bounds 2 <= x1 <= 50 and -50 <= x2 <= 50
    q = make_infeasible(p)
    assert q.m == p.m - 2 + 2
    kept = make_infeasible(p, replace_bounds=False)
    assert kept.m == p.m + 2
    # the minimum total violation is 1 once the old x1 bounds are gone
    x = np.array([1.0, 0.0])
    assert violation(q, x)[0] == pytest.approx(1.0)
    assert violation(kept, x)[0] == pytest.approx(2.0)


@settings(max_examples=200, deadline=None)
@given(st.floats(-1e3, 1e3), st.floats(-1e3, 1e3))
def test_infeasible_variant_has_no_feasible_point(x1, x2):
    q = get_problem("hs11_inf")
    v, _ = violation(q, np.array([x1, x2]))
    assert v >= 0.5
    added = np.maximum(q.c_eval(np.array([x1, x2]))[-2:], 0.0).sum()
    assert added >= 1.0 - 1e-12


def test_counters_count_each_call():
    p, counters = counted(get_problem("hs28"))
    x = p.x0
    p.f_eval(x)
    p.f_eval(x)
    p.c_eval(x)
    p.grad_f(x)
    p.jac_c(x)
    p.hess_f(x)
    p.hess_c(x, 0)
    assert (counters.n_f, counters.n_c, counters.n_grad, counters.n_hess) == (2, 1, 2, 2)


def test_problem_validation():
    p = get_problem("hs28")
    with pytest.raises(ValueError):
        NlpProblem("bad", p.n, p.m, p.m + 1, p.f_eval, p.c_eval, p.grad_f, p.jac_c, p.hess_f, p.hess_c, p.x0)
    with pytest.raises(ValueError):
        NlpProblem("bad", p.n, p.m, p.m_eq, p.f_eval, p.c_eval, p.grad_f, p.jac_c, p.hess_f, p.hess_c, np.zeros(2))


def test_random_convex_problem_is_feasible_and_consistent():
    p = random_convex_problem(n=40, m=20, m_eq=5, seed=3)
    assert check_derivatives(p, p.x0 + 0.3, 1e-6) <= 1e-6
    assert (p.n, p.m, p.m_eq) == (40, 20, 5)


def test_feasible_names_order_is_stable():
    assert feasible_names() == feasible_names()
