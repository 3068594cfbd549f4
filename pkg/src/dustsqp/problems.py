"""Problem abstraction, Hock-Schittkowski registry and derivative checking.

Constraints follow a single sign convention: rows ``0 .. m_eq-1`` are
equalities ``c_i(x) = 0`` and the remaining rows are ``c_i(x) <= 0``.
Problems published in ``g(x) >= 0`` form are negated when they are entered.
Simple bounds are stored as ordinary inequality rows.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from typing import Callable

import numpy as np

Vector = np.ndarray
Matrix = np.ndarray


@dataclass(frozen=True)
class NlpProblem:
    """Callback description of ``min f(x) s.t. c_E(x) = 0, c_I(x) <= 0``."""

    name: str
    n: int
    m: int
    m_eq: int
    f_eval: Callable[[Vector], float]
    c_eval: Callable[[Vector], Vector]
    grad_f: Callable[[Vector], Vector]
    jac_c: Callable[[Vector], Matrix]
    hess_f: Callable[[Vector], Matrix]
    hess_c: Callable[[Vector, int], Matrix]
    x0: Vector
    # per-row variable index for simple-bound rows, -1 for general rows; empty if unknown
    bound_var: tuple[int, ...] = ()

    def __post_init__(self):
        if self.n < 1:
            raise ValueError(f"{self.name}: n must be >= 1, got {self.n}")
        if not 0 <= self.m_eq <= self.m:
            raise ValueError(f"{self.name}: need 0 <= m_eq <= m, got m_eq={self.m_eq}, m={self.m}")
        x0 = np.asarray(self.x0, dtype=float)
        if x0.shape != (self.n,):
            raise ValueError(f"{self.name}: x0 has shape {x0.shape}, expected ({self.n},)")
        x0.setflags(write=False)
        object.__setattr__(self, "x0", x0)
        if self.bound_var and len(self.bound_var) != self.m:
            raise ValueError(f"{self.name}: bound_var has {len(self.bound_var)} entries, expected {self.m}")

    def hess_constraints(self, x: Vector, weights: Vector) -> Matrix:
        """Return ``sum_i weights[i] * hess c_i(x)``, skipping zero weights."""
        out = np.zeros((self.n, self.n))
        for i, w in enumerate(weights):
            if w != 0.0:
                out += w * self.hess_c(x, i)
        return out


@dataclass
class EvalCounters:
    n_f: int = 0
    n_c: int = 0
    n_grad: int = 0
    n_hess: int = 0


def counted(p: NlpProblem) -> tuple[NlpProblem, EvalCounters]:
    """Wrap ``p`` so each callback invocation bumps a fresh counter set.

    Jacobian calls count towards ``n_grad`` and every Hessian callback
    (objective or single constraint) towards ``n_hess``.
    """
    counters = EvalCounters()

    def f_eval(x):
        counters.n_f += 1
        return p.f_eval(x)

    def c_eval(x):
        counters.n_c += 1
        return p.c_eval(x)

    def grad_f(x):
        counters.n_grad += 1
        return p.grad_f(x)

    def jac_c(x):
        counters.n_grad += 1
        return p.jac_c(x)

    def hess_f(x):
        counters.n_hess += 1
        return p.hess_f(x)

    def hess_c(x, i):
        counters.n_hess += 1
        return p.hess_c(x, i)

    wrapped = dataclasses.replace(
        p, f_eval=f_eval, c_eval=c_eval, grad_f=grad_f, jac_c=jac_c, hess_f=hess_f, hess_c=hess_c
    )
    return wrapped, counters


# ---------------------------------------------------------------------------
# Problem assembly helpers

Row = tuple[Callable[[Vector], float], Callable[[Vector], Vector], Callable[[Vector], Matrix]]


def _linear_row(a, b: float) -> Row:
    """Row ``<a, x> + b``."""
    a = np.asarray(a, dtype=float)
    zero = np.zeros((a.size, a.size))
    return (lambda x: float(a @ x + b), lambda x: a.copy(), lambda x: zero.copy())


def _bound_rows(n: int, lower=None, upper=None) -> list[Row]:
    """Inequality rows ``lb_i - x_i <= 0`` and ``x_i - ub_i <= 0``; ``None`` entries are skipped.

    Each row carries the bounded variable index as a fourth element.
    """
    rows = []
    for i in range(n):
        if lower is not None and lower[i] is not None:
            a = np.zeros(n)
            a[i] = -1.0
            rows.append(_linear_row(a, float(lower[i])) + (i,))
        if upper is not None and upper[i] is not None:
            a = np.zeros(n)
            a[i] = 1.0
            rows.append(_linear_row(a, -float(upper[i])) + (i,))
    return rows


def _assemble(name, n, f, df, d2f, eq_rows, ineq_rows, x0) -> NlpProblem:
    rows = list(eq_rows) + list(ineq_rows)
    m = len(rows)

    def c_eval(x):
        return np.array([r[0](x) for r in rows], dtype=float)

    def jac_c(x):
        if m == 0:
            return np.zeros((0, n))
        return np.array([r[1](x) for r in rows], dtype=float)

    def hess_c(x, i):
        return np.asarray(rows[i][2](x), dtype=float)

    return NlpProblem(
        name=name,
        n=n,
        m=m,
        m_eq=len(eq_rows),
        f_eval=lambda x: float(f(x)),
        c_eval=c_eval,
        grad_f=lambda x: np.asarray(df(x), dtype=float),
        jac_c=jac_c,
        hess_f=lambda x: np.asarray(d2f(x), dtype=float),
        hess_c=hess_c,
        x0=np.asarray(x0, dtype=float),
        bound_var=tuple(r[3] if len(r) > 3 else -1 for r in rows),
    )


def _quadratic(Q, q, const=0.0):
    """Callbacks for ``0.5 x'Qx + q'x + const``."""
    Q = np.asarray(Q, dtype=float)
    q = np.asarray(q, dtype=float)
    return (lambda x: 0.5 * x @ Q @ x + q @ x + const, lambda x: Q @ x + q, lambda x: Q.copy())


# ---------------------------------------------------------------------------
# Hock-Schittkowski problems


def _hs11():
    def f(x):
        return (x[0] - 5.0) ** 2 + x[1] ** 2 - 25.0

    def df(x):
        return [2.0 * (x[0] - 5.0), 2.0 * x[1]]

    def d2f(x):
        return np.diag([2.0, 2.0])

    # x2 - x1^2 >= 0
    ineq = [(lambda x: x[0] ** 2 - x[1], lambda x: np.array([2.0 * x[0], -1.0]), lambda x: np.diag([2.0, 0.0]))]
    return _assemble("hs11", 2, f, df, d2f, [], ineq, [4.9, 0.1])


def _hs14():
    def f(x):
        return (x[0] - 2.0) ** 2 + (x[1] - 1.0) ** 2

    def df(x):
        return [2.0 * (x[0] - 2.0), 2.0 * (x[1] - 1.0)]

    def d2f(x):
        return np.diag([2.0, 2.0])

    eq = [_linear_row([1.0, -2.0], 1.0)]
    # 1 - x1^2/4 - x2^2 >= 0
    ineq = [
        (
            lambda x: 0.25 * x[0] ** 2 + x[1] ** 2 - 1.0,
            lambda x: np.array([0.5 * x[0], 2.0 * x[1]]),
            lambda x: np.diag([0.5, 2.0]),
        )
    ]
    return _assemble("hs14", 2, f, df, d2f, eq, ineq, [2.0, 2.0])


def _hs21():
    f, df, d2f = _quadratic(np.diag([0.02, 2.0]), [0.0, 0.0], -100.0)
    ineq = [_linear_row([-10.0, 1.0], 10.0)]  # 10 x1 - x2 - 10 >= 0
    ineq += _bound_rows(2, lower=[2.0, -50.0], upper=[50.0, 50.0])
    return _assemble("hs21", 2, f, df, d2f, [], ineq, [-1.0, -1.0])


def _hs28():
    # (x1 + x2)^2 + (x2 + x3)^2
    Q = 2.0 * np.array([[1.0, 1.0, 0.0], [1.0, 2.0, 1.0], [0.0, 1.0, 1.0]])
    f, df, d2f = _quadratic(Q, np.zeros(3))
    eq = [_linear_row([1.0, 2.0, 3.0], -1.0)]
    return _assemble("hs28", 3, f, df, d2f, eq, [], [-4.0, 1.0, 1.0])


def _hs32():
    # (x1 + 3 x2 + x3)^2 + 4 (x1 - x2)^2
    u = np.array([1.0, 3.0, 1.0])
    w = np.array([1.0, -1.0, 0.0])
    Q = 2.0 * np.outer(u, u) + 8.0 * np.outer(w, w)
    f, df, d2f = _quadratic(Q, np.zeros(3))
    eq = [_linear_row([-1.0, -1.0, -1.0], 1.0)]  # 1 - x1 - x2 - x3 = 0
    ineq = [
        (
            # 6 x2 + 4 x3 - x1^3 - 3 >= 0
            lambda x: x[0] ** 3 - 6.0 * x[1] - 4.0 * x[2] + 3.0,
            lambda x: np.array([3.0 * x[0] ** 2, -6.0, -4.0]),
            lambda x: np.diag([6.0 * x[0], 0.0, 0.0]),
        )
    ]
    ineq += _bound_rows(3, lower=[0.0, 0.0, 0.0])
    return _assemble("hs32", 3, f, df, d2f, eq, ineq, [0.1, 0.7, 0.2])


def _hs35():
    Q = np.array([[4.0, 2.0, 2.0], [2.0, 4.0, 0.0], [2.0, 0.0, 2.0]])
    f, df, d2f = _quadratic(Q, [-8.0, -6.0, -4.0], 9.0)
    ineq = [_linear_row([1.0, 1.0, 2.0], -3.0)]  # 3 - x1 - x2 - 2 x3 >= 0
    ineq += _bound_rows(3, lower=[0.0, 0.0, 0.0])
    return _assemble("hs35", 3, f, df, d2f, [], ineq, [0.5, 0.5, 0.5])


def _hs41():
    def f(x):
        return 2.0 - x[0] * x[1] * x[2]

    def df(x):
        return [-x[1] * x[2], -x[0] * x[2], -x[0] * x[1], 0.0]

    def d2f(x):
        H = np.zeros((4, 4))
        H[0, 1] = H[1, 0] = -x[2]
        H[0, 2] = H[2, 0] = -x[1]
        H[1, 2] = H[2, 1] = -x[0]
        return H

    eq = [_linear_row([1.0, 2.0, 2.0, -1.0], 0.0)]
    ineq = _bound_rows(4, lower=[0.0] * 4, upper=[1.0, 1.0, 1.0, 2.0])
    return _assemble("hs41", 4, f, df, d2f, eq, ineq, [2.0, 2.0, 2.0, 2.0])


def _hs43():
    f, df, d2f = _quadratic(np.diag([2.0, 2.0, 4.0, 2.0]), [-5.0, -5.0, -21.0, 7.0])

    def quad_row(diag, lin, const):
        diag = np.asarray(diag, dtype=float)
        lin = np.asarray(lin, dtype=float)
        return (
            lambda x: float(diag @ (x * x) + lin @ x + const),
            lambda x: 2.0 * diag * x + lin,
            lambda x: np.diag(2.0 * diag),
        )

    # each published row is "8 - ... >= 0"; stored negated
    ineq = [
        quad_row([1.0, 1.0, 1.0, 1.0], [1.0, -1.0, 1.0, -1.0], -8.0),
        quad_row([1.0, 2.0, 1.0, 2.0], [-1.0, 0.0, 0.0, -1.0], -10.0),
        quad_row([2.0, 1.0, 1.0, 0.0], [2.0, -1.0, 0.0, -1.0], -5.0),
    ]
    return _assemble("hs43", 4, f, df, d2f, [], ineq, [0.0, 0.0, 0.0, 0.0])


def _hs48():
    # (x1-1)^2 + (x2-x3)^2 + (x4-x5)^2
    Q = np.zeros((5, 5))
    Q[0, 0] = 2.0
    Q[1:3, 1:3] = [[2.0, -2.0], [-2.0, 2.0]]
    Q[3:5, 3:5] = [[2.0, -2.0], [-2.0, 2.0]]
    f, df, d2f = _quadratic(Q, [-2.0, 0.0, 0.0, 0.0, 0.0], 1.0)
    eq = [_linear_row([1.0, 1.0, 1.0, 1.0, 1.0], -5.0), _linear_row([0.0, 0.0, 1.0, -2.0, -2.0], 3.0)]
    return _assemble("hs48", 5, f, df, d2f, eq, [], [3.0, 5.0, -3.0, 2.0, -2.0])


def _hs51_52_objective(lead: float):
    # (lead*x1 - x2)^2 + (x2 + x3 - 2)^2 + (x4 - 1)^2 + (x5 - 1)^2
    u = np.array([lead, -1.0, 0.0, 0.0, 0.0])
    w = np.array([0.0, 1.0, 1.0, 0.0, 0.0])
    Q = 2.0 * (np.outer(u, u) + np.outer(w, w) + np.diag([0.0, 0.0, 0.0, 1.0, 1.0]))
    q = -4.0 * w + np.array([0.0, 0.0, 0.0, -2.0, -2.0])
    return _quadratic(Q, q, 6.0)


def _hs51():
    f, df, d2f = _hs51_52_objective(1.0)
    eq = [
        _linear_row([1.0, 3.0, 0.0, 0.0, 0.0], -4.0),
        _linear_row([0.0, 0.0, 1.0, 1.0, -2.0], 0.0),
        _linear_row([0.0, 1.0, 0.0, 0.0, -1.0], 0.0),
    ]
    return _assemble("hs51", 5, f, df, d2f, eq, [], [2.5, 0.5, 2.0, -1.0, 0.5])


def _hs52():
    f, df, d2f = _hs51_52_objective(4.0)
    eq = [
        _linear_row([1.0, 3.0, 0.0, 0.0, 0.0], 0.0),
        _linear_row([0.0, 0.0, 1.0, 1.0, -2.0], 0.0),
        _linear_row([0.0, 1.0, 0.0, 0.0, -1.0], 0.0),
    ]
    return _assemble("hs52", 5, f, df, d2f, eq, [], [2.0, 2.0, 2.0, 2.0, 2.0])


def _hs61():
    f, df, d2f = _quadratic(np.diag([8.0, 4.0, 4.0]), [-33.0, 16.0, -24.0])
    eq = [
        (
            lambda x: 3.0 * x[0] - 2.0 * x[1] ** 2 - 7.0,
            lambda x: np.array([3.0, -4.0 * x[1], 0.0]),
            lambda x: np.diag([0.0, -4.0, 0.0]),
        ),
        (
            lambda x: 4.0 * x[0] - x[2] ** 2 - 11.0,
            lambda x: np.array([4.0, 0.0, -2.0 * x[2]]),
            lambda x: np.diag([0.0, 0.0, -2.0]),
        ),
    ]
    return _assemble("hs61", 3, f, df, d2f, eq, [], [0.0, 0.0, 0.0])


def _hs76():
    Q = np.array(
        [
            [2.0, 0.0, -1.0, 0.0],
            [0.0, 1.0, 0.0, 0.0],
            [-1.0, 0.0, 2.0, 1.0],
            [0.0, 0.0, 1.0, 1.0],
        ]
    )
    f, df, d2f = _quadratic(Q, [-1.0, -3.0, 1.0, -1.0])
    ineq = [
        _linear_row([1.0, 2.0, 1.0, 1.0], -5.0),
        _linear_row([3.0, 1.0, 2.0, -1.0], -4.0),
        _linear_row([0.0, -1.0, -4.0, 0.0], 1.5),
    ]
    ineq += _bound_rows(4, lower=[0.0] * 4)
    return _assemble("hs76", 4, f, df, d2f, [], ineq, [0.5, 0.5, 0.5, 0.5])


def _hs100():
    def f(x):
        return (
            (x[0] - 10.0) ** 2
            + 5.0 * (x[1] - 12.0) ** 2
            + x[2] ** 4
            + 3.0 * (x[3] - 11.0) ** 2
            + 10.0 * x[4] ** 6
            + 7.0 * x[5] ** 2
            + x[6] ** 4
            - 4.0 * x[5] * x[6]
            - 10.0 * x[5]
            - 8.0 * x[6]
        )

    def df(x):
        return [
            2.0 * (x[0] - 10.0),
            10.0 * (x[1] - 12.0),
            4.0 * x[2] ** 3,
            6.0 * (x[3] - 11.0),
            60.0 * x[4] ** 5,
            14.0 * x[5] - 4.0 * x[6] - 10.0,
            4.0 * x[6] ** 3 - 4.0 * x[5] - 8.0,
        ]

    def d2f(x):
        H = np.diag([2.0, 10.0, 12.0 * x[2] ** 2, 6.0, 300.0 * x[4] ** 4, 14.0, 12.0 * x[6] ** 2])
        H[5, 6] = H[6, 5] = -4.0
        return H

    def row1(x):
        return 2.0 * x[0] ** 2 + 3.0 * x[1] ** 4 + x[2] + 4.0 * x[3] ** 2 + 5.0 * x[4] - 127.0

    def row2(x):
        return 7.0 * x[0] + 3.0 * x[1] + 10.0 * x[2] ** 2 + x[3] - x[4] - 282.0

    def row3(x):
        return 23.0 * x[0] + x[1] ** 2 + 6.0 * x[5] ** 2 - 8.0 * x[6] - 196.0

    def row4(x):
        return 4.0 * x[0] ** 2 + x[1] ** 2 - 3.0 * x[0] * x[1] + 2.0 * x[2] ** 2 + 5.0 * x[5] - 11.0 * x[6]

    def h1(x):
        return np.diag([4.0, 36.0 * x[1] ** 2, 0.0, 8.0, 0.0, 0.0, 0.0])

    def h4(x):
        H = np.diag([8.0, 2.0, 4.0, 0.0, 0.0, 0.0, 0.0])
        H[0, 1] = H[1, 0] = -3.0
        return H

    ineq = [
        (row1, lambda x: np.array([4.0 * x[0], 12.0 * x[1] ** 3, 1.0, 8.0 * x[3], 5.0, 0.0, 0.0]), h1),
        (
            row2,
            lambda x: np.array([7.0, 3.0, 20.0 * x[2], 1.0, -1.0, 0.0, 0.0]),
            lambda x: np.diag([0.0, 0.0, 20.0, 0.0, 0.0, 0.0, 0.0]),
        ),
        (
            row3,
            lambda x: np.array([23.0, 2.0 * x[1], 0.0, 0.0, 0.0, 12.0 * x[5], -8.0]),
            lambda x: np.diag([0.0, 2.0, 0.0, 0.0, 0.0, 12.0, 0.0]),
        ),
        (
            row4,
            lambda x: np.array(
                [8.0 * x[0] - 3.0 * x[1], 2.0 * x[1] - 3.0 * x[0], 4.0 * x[2], 0.0, 0.0, 5.0, -11.0]
            ),
            h4,
        ),
    ]
    return _assemble("hs100", 7, f, df, d2f, [], ineq, [1.0, 2.0, 0.0, 4.0, 0.0, 1.0, 1.0])


def _hs113():
    n = 10
    Q = np.diag([2.0, 2.0, 2.0, 8.0, 2.0, 4.0, 10.0, 14.0, 4.0, 2.0])
    Q[0, 1] = Q[1, 0] = 1.0
    q = np.array([-14.0, -16.0, -20.0, -40.0, -6.0, -4.0, 0.0, -154.0, -40.0, -14.0])
    const = 100.0 + 100.0 + 9.0 + 2.0 + 847.0 + 200.0 + 49.0 + 45.0
    f, df, d2f = _quadratic(Q, q, const)

    def e(*pairs):
        a = np.zeros(n)
        for i, v in pairs:
            a[i] = v
        return a

    def quad_row(value, grad, hess_diag, cross=None):
        H = np.diag(np.asarray(hess_diag, dtype=float))
        if cross is not None:
            i, j, v = cross
            H[i, j] = H[j, i] = v
        return (value, grad, lambda x: H.copy())

    ineq = [
        _linear_row(e((0, 4.0), (1, 5.0), (6, -3.0), (7, 9.0)), -105.0),
        _linear_row(e((0, 10.0), (1, -8.0), (6, -17.0), (7, 2.0)), 0.0),
        _linear_row(e((0, -8.0), (1, 2.0), (8, 5.0), (9, -2.0)), -12.0),
        quad_row(
            lambda x: 3.0 * (x[0] - 2.0) ** 2 + 4.0 * (x[1] - 3.0) ** 2 + 2.0 * x[2] ** 2 - 7.0 * x[3] - 120.0,
            lambda x: e((0, 6.0 * (x[0] - 2.0)), (1, 8.0 * (x[1] - 3.0)), (2, 4.0 * x[2]), (3, -7.0)),
            [6.0, 8.0, 4.0] + [0.0] * 7,
        ),
        quad_row(
            lambda x: 5.0 * x[0] ** 2 + 8.0 * x[1] + (x[2] - 6.0) ** 2 - 2.0 * x[3] - 40.0,
            lambda x: e((0, 10.0 * x[0]), (1, 8.0), (2, 2.0 * (x[2] - 6.0)), (3, -2.0)),
            [10.0, 0.0, 2.0] + [0.0] * 7,
        ),
        quad_row(
            lambda x: 0.5 * (x[0] - 8.0) ** 2 + 2.0 * (x[1] - 4.0) ** 2 + 3.0 * x[4] ** 2 - x[5] - 30.0,
            lambda x: e((0, x[0] - 8.0), (1, 4.0 * (x[1] - 4.0)), (4, 6.0 * x[4]), (5, -1.0)),
            [1.0, 4.0, 0.0, 0.0, 6.0] + [0.0] * 5,
        ),
        quad_row(
            lambda x: x[0] ** 2 + 2.0 * (x[1] - 2.0) ** 2 - 2.0 * x[0] * x[1] + 14.0 * x[4] - 6.0 * x[5],
            lambda x: e((0, 2.0 * x[0] - 2.0 * x[1]), (1, 4.0 * (x[1] - 2.0) - 2.0 * x[0]), (4, 14.0), (5, -6.0)),
            [2.0, 4.0] + [0.0] * 8,
            cross=(0, 1, -2.0),
        ),
        quad_row(
            lambda x: -3.0 * x[0] + 6.0 * x[1] + 12.0 * (x[8] - 8.0) ** 2 - 7.0 * x[9],
            lambda x: e((0, -3.0), (1, 6.0), (8, 24.0 * (x[8] - 8.0)), (9, -7.0)),
            [0.0] * 8 + [24.0, 0.0],
        ),
    ]
    return _assemble("hs113", n, f, df, d2f, [], ineq, [2.0, 3.0, 5.0, 5.0, 1.0, 2.0, 7.0, 3.0, 6.0, 10.0])


_FEASIBLE_BUILDERS: dict[str, Callable[[], NlpProblem]] = {
    "hs11": _hs11,
    "hs14": _hs14,
    "hs21": _hs21,
    "hs28": _hs28,
    "hs32": _hs32,
    "hs35": _hs35,
    "hs41": _hs41,
    "hs43": _hs43,
    "hs48": _hs48,
    "hs51": _hs51,
    "hs52": _hs52,
    "hs61": _hs61,
    "hs76": _hs76,
    "hs100": _hs100,
    "hs113": _hs113,
}

# Best known objective values of the feasible problems.
KNOWN_OPTIMA = {
    "hs11": -8.498464223,
    "hs14": 9.0 - 2.875 * np.sqrt(7.0),
    "hs21": -99.96,
    "hs28": 0.0,
    "hs32": 1.0,
    "hs35": 1.0 / 9.0,
    "hs41": 52.0 / 27.0,
    "hs43": -44.0,
    "hs48": 0.0,
    "hs51": 0.0,
    "hs52": 1859.0 / 349.0,
    "hs61": -143.6461422,
    "hs76": -4.681818181,
    "hs100": 680.6300573,
    "hs113": 24.3062091,
}


def make_infeasible(p: NlpProblem, replace_bounds: bool = True) -> NlpProblem:
    """Append the contradictory rows ``x_1 <= 0`` and ``1 - x_1 <= 0``.

    Every point then violates the appended pair by at least 1 in total,
    so the returned problem has no feasible point. With ``replace_bounds``
    any simple-bound rows on ``x_1`` are dropped first, so the new pair
    acts as the bounds on that variable.
    """
    n = p.n
    keep = np.arange(p.m)
    if replace_bounds and p.bound_var:
        keep = np.array([i for i in range(p.m) if p.bound_var[i] != 0], dtype=int)
    mk = keep.size
    e1 = np.zeros(n)
    e1[0] = 1.0
    extra_jac = np.vstack([e1, -e1])
    zero = np.zeros((n, n))

    def c_eval(x):
        return np.concatenate([np.asarray(p.c_eval(x))[keep], [x[0], 1.0 - x[0]]])

    def jac_c(x):
        return np.vstack([p.jac_c(x).reshape(p.m, n)[keep], extra_jac])

    def hess_c(x, i):
        if i < mk:
            return p.hess_c(x, int(keep[i]))
        return zero.copy()

    bound_var = tuple(p.bound_var[i] for i in keep) + (0, 0) if p.bound_var else ()
    return NlpProblem(
        name=p.name + "_inf",
        n=n,
        m=mk + 2,
        m_eq=p.m_eq,
        f_eval=p.f_eval,
        c_eval=c_eval,
        grad_f=p.grad_f,
        jac_c=jac_c,
        hess_f=p.hess_f,
        hess_c=hess_c,
        x0=p.x0,
        bound_var=bound_var,
    )


def feasible_names() -> list[str]:
    return list(_FEASIBLE_BUILDERS)


def infeasible_names() -> list[str]:
    return [name + "_inf" for name in _FEASIBLE_BUILDERS]


def available_problems() -> list[str]:
    return feasible_names() + infeasible_names()


def get_problem(name: str) -> NlpProblem:
    """Look up a registered problem; ``<name>_inf`` gives its infeasible variant."""
    if name in _FEASIBLE_BUILDERS:
        return _FEASIBLE_BUILDERS[name]()
    if name.endswith("_inf") and name[: -len("_inf")] in _FEASIBLE_BUILDERS:
        return make_infeasible(_FEASIBLE_BUILDERS[name[: -len("_inf")]]())
    raise KeyError(f"unknown problem {name!r}; available: {', '.join(available_problems())}")


def check_derivatives(p: NlpProblem, x: Vector, h: float = 1e-6) -> float:
    """Largest relative mismatch between analytic and central-difference first derivatives.

    Each entry contributes ``|analytic - fd| / max(1, |analytic|)``; both the
    objective gradient and every Jacobian row are checked.
    """
    if h <= 0:
        raise ValueError("step h must be positive")
    x = np.asarray(x, dtype=float)
    g = np.asarray(p.grad_f(x), dtype=float)
    J = np.asarray(p.jac_c(x), dtype=float).reshape(p.m, p.n)
    g_fd = np.empty(p.n)
    J_fd = np.empty((p.m, p.n))
    for j in range(p.n):
        step = np.zeros(p.n)
        step[j] = h
        g_fd[j] = (p.f_eval(x + step) - p.f_eval(x - step)) / (2.0 * h)
        J_fd[:, j] = (p.c_eval(x + step) - p.c_eval(x - step)) / (2.0 * h)
    err = np.abs(g - g_fd) / np.maximum(1.0, np.abs(g))
    worst = float(err.max())
    if p.m:
        errJ = np.abs(J - J_fd) / np.maximum(1.0, np.abs(J))
        worst = max(worst, float(errJ.max()))
    return worst


def random_convex_problem(n: int = 500, m: int = 300, m_eq: int = 100, seed: int = 0, density: float = 0.02) -> NlpProblem:
    """Separable convex objective with sparse random linear constraints.

    ``f(x) = 0.5 x'Dx + q'x + 0.01/12 * sum(x^4)`` with ``D`` diagonal in
    [1, 10]. The constraints are built around a known point so the problem
    is feasible with strict slack on every inequality.
    """
    rng = np.random.default_rng(seed)
    dvec = rng.uniform(1.0, 10.0, n)
    q = rng.normal(size=n)
    quartic = 0.01 / 12.0
    A = np.zeros((m, n))
    for i in range(m):
        nnz = max(2, int(density * n))
        cols = rng.choice(n, size=nnz, replace=False)
        A[i, cols] = rng.normal(size=nnz)
    x_feas = rng.normal(size=n) * 0.5
    b = -A @ x_feas
    b[m_eq:] -= rng.uniform(0.1, 1.0, m - m_eq)
    zero = np.zeros((n, n))

    return NlpProblem(
        name=f"convex_n{n}_m{m}",
        n=n,
        m=m,
        m_eq=m_eq,
        f_eval=lambda x: float(0.5 * dvec @ (x * x) + q @ x + quartic * np.sum(x**4)),
        c_eval=lambda x: A @ x + b,
        grad_f=lambda x: dvec * x + q + 4.0 * quartic * x**3,
        jac_c=lambda x: A.copy(),
        hess_f=lambda x: np.diag(dvec + 12.0 * quartic * x**2),
        hess_c=lambda x, i: zero,
        x0=np.zeros(n),
    )
