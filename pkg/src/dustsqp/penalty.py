"""Infeasibility measure, exact penalty, linearized models and KKT errors."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .problems import NlpProblem

ZERO_ROW_TOL = 1e-12


class DegenerateConstraintError(ValueError):
    """A linearized constraint has a vanishing gradient but a nonzero value."""


def violation_terms(c: np.ndarray, m_eq: int) -> np.ndarray:
    """Per-row violation ``|c_i|`` for equalities and ``(c_i)_+`` for inequalities."""
    c = np.asarray(c, dtype=float)
    out = np.empty_like(c)
    out[:m_eq] = np.abs(c[:m_eq])
    out[m_eq:] = np.maximum(c[m_eq:], 0.0)
    return out


def violation(p: NlpProblem, x) -> tuple[float, float]:
    """Return ``(v(x), v_inf(x))``: the l1 and max violation of the constraints."""
    if p.m == 0:
        return 0.0, 0.0
    terms = violation_terms(p.c_eval(np.asarray(x, dtype=float)), p.m_eq)
    return float(terms.sum()), float(terms.max())


def penalty(p: NlpProblem, x, rho: float) -> float:
    """Exact penalty ``rho f(x) + v(x)``."""
    if rho < 0:
        raise ValueError("rho must be nonnegative")
    v, _ = violation(p, x)
    if rho == 0.0:
        return v
    return rho * p.f_eval(np.asarray(x, dtype=float)) + v


@dataclass(frozen=True)
class SubproblemData:
    """Linearization of the problem at one iterate.

    ``rows`` maps each kept row back to its index in the full constraint
    vector; rows whose gradient and value both vanish are dropped.
    """

    g: np.ndarray
    A: np.ndarray
    b: np.ndarray
    m_eq: int
    norm_a: np.ndarray
    a_bar: np.ndarray
    b_bar: np.ndarray
    j0: float
    rows: np.ndarray
    m_full: int

    @property
    def m(self) -> int:
        return self.A.shape[0]

    @property
    def n(self) -> int:
        return self.g.size

    @property
    def lower(self) -> np.ndarray:
        lo = np.zeros(self.m)
        lo[: self.m_eq] = -1.0
        return lo

    @property
    def upper(self) -> np.ndarray:
        return np.ones(self.m)

    @classmethod
    def from_arrays(cls, g, A, b, m_eq: int) -> "SubproblemData":
        g = np.asarray(g, dtype=float).ravel()
        A = np.asarray(A, dtype=float).reshape(-1, g.size)
        b = np.asarray(b, dtype=float).ravel()
        m_full = A.shape[0]
        if b.size != m_full:
            raise ValueError("A and b disagree on the number of rows")
        norms = np.linalg.norm(A, axis=1)
        keep = []
        for i in range(m_full):
            if norms[i] >= ZERO_ROW_TOL:
                keep.append(i)
                continue
            # constant row: harmless only if it is (numerically) satisfied
            satisfied = abs(b[i]) < ZERO_ROW_TOL if i < m_eq else b[i] < ZERO_ROW_TOL
            if not satisfied:
                raise DegenerateConstraintError(
                    f"constraint {i} has zero gradient and value {b[i]:.3e}; no step can reduce it"
                )
        keep = np.asarray(keep, dtype=int)
        new_m_eq = int(np.sum(keep < m_eq))
        A = A[keep]
        b = b[keep]
        norm_a = norms[keep]
        j0 = float(violation_terms(b, new_m_eq).sum())
        return cls(
            g=g,
            A=A,
            b=b,
            m_eq=new_m_eq,
            norm_a=norm_a,
            a_bar=A / norm_a[:, None] if keep.size else A.copy(),
            b_bar=b / norm_a if keep.size else b.copy(),
            j0=j0,
            rows=keep,
            m_full=m_full,
        )

    def expand(self, mult: np.ndarray) -> np.ndarray:
        """Scatter multipliers on the kept rows into a full-length vector."""
        out = np.zeros(self.m_full)
        out[self.rows] = mult
        return out

    def restrict(self, mult_full: np.ndarray) -> np.ndarray:
        return np.asarray(mult_full, dtype=float)[self.rows]


def build_subproblem(p: NlpProblem, x, g=None, c=None, A=None) -> SubproblemData:
    """Evaluate (or reuse) ``grad f``, ``c`` and the Jacobian at ``x``."""
    x = np.asarray(x, dtype=float)
    g = p.grad_f(x) if g is None else g
    c = p.c_eval(x) if c is None else c
    A = p.jac_c(x) if A is None else A
    return SubproblemData.from_arrays(g, A, c, p.m_eq)


def linear_model(d, rho: float, sd: SubproblemData) -> float:
    """``l(d, rho) = rho <g, d> + sum of linearized violations``."""
    d = np.asarray(d, dtype=float)
    r = sd.A @ d + sd.b
    return float(rho * (sd.g @ d) + violation_terms(r, sd.m_eq).sum())


def reductions(d, rho: float, sd: SubproblemData, H) -> tuple[float, float, float]:
    """Model reductions ``(dl(d,0), dl(d,rho), dJ(d,rho))`` relative to the zero step.

    ``H`` is the Hessian model evaluated at ``rho`` (anything with a
    ``matvec`` method, or a dense array).
    """
    d = np.asarray(d, dtype=float)
    l0 = linear_model(d, 0.0, sd)
    delta_l0 = sd.j0 - l0
    delta_l_rho = delta_l0 - rho * float(sd.g @ d)
    Hd = H @ d if isinstance(H, np.ndarray) else H.matvec(d)
    delta_J = delta_l_rho - 0.5 * float(d @ Hd)
    return delta_l0, delta_l_rho, delta_J


@dataclass(frozen=True)
class KktReport:
    v_inf: float
    eps_opt: float
    eps_fea: float


def kkt_errors(p: NlpProblem, x, eta, eta_fea=None, c=None, g=None, A=None) -> KktReport:
    """Optimality and infeasible-stationarity errors.

    ``eta`` are Lagrange multipliers for the optimality error; ``eta_fea``
    (defaults to ``eta``) are the feasibility-problem multipliers. A 2-D
    ``eta_fea`` holds several candidates, one per row, and the smallest
    feasibility error among them is reported.
    Precomputed ``c``, ``g`` and ``A`` may be passed to avoid re-evaluation.
    """
    x = np.asarray(x, dtype=float)
    c = p.c_eval(x) if c is None else np.asarray(c, dtype=float)
    g = p.grad_f(x) if g is None else np.asarray(g, dtype=float)
    A = (p.jac_c(x) if A is None else np.asarray(A, dtype=float)).reshape(p.m, p.n)
    eta = np.asarray(eta, dtype=float)
    eta_fea = eta if eta_fea is None else np.asarray(eta_fea, dtype=float)
    me = p.m_eq

    v_inf = float(violation_terms(c, me).max()) if p.m else 0.0
    grad_lag = g + A.T @ eta
    eps_opt = float(np.max(np.abs(grad_lag))) if p.n else 0.0
    if p.m:
        eps_opt = max(eps_opt, float(np.max(np.abs(eta * c))))

    if eta_fea.ndim == 2:
        eps_fea = min(_feasibility_error(A, c, me, row) for row in eta_fea) if len(eta_fea) else np.inf
    else:
        eps_fea = _feasibility_error(A, c, me, eta_fea)
    return KktReport(v_inf=v_inf, eps_opt=eps_opt, eps_fea=eps_fea)


def _feasibility_error(A, c, m_eq, lam) -> float:
    if not c.size:
        return 0.0
    err = float(np.max(np.abs(A.T @ lam)))
    cE, cI = c[:m_eq], c[m_eq:]
    lE, lI = lam[:m_eq], lam[m_eq:]
    terms = (
        (1.0 - lE) * np.maximum(cE, 0.0),
        (1.0 + lE) * np.maximum(-cE, 0.0),
        (1.0 - lI) * np.maximum(cI, 0.0),
        lI * np.maximum(-cI, 0.0),
    )
    for t in terms:
        if t.size:
            err = max(err, float(np.max(np.abs(t))))
    return err
