"""Shared fixtures and brute-force oracles for the test suite."""

from __future__ import annotations

import itertools
import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).resolve().parent))

from dustsqp.penalty import SubproblemData, violation_terms  # noqa: E402

# acceptance lines collected by test_acceptance.py, printed after the run
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


def box_dual_oracle(sd: SubproblemData, H: np.ndarray, rho: float) -> float:
    """Maximize ``-0.5 y'H^{-1}y + z'b`` (``y = A'z + rho g``) over the box by enumeration.

    Every coordinate is either at its lower bound, its upper bound or free;
    each pattern fixes the free block through its stationarity equations.
    Box-feasible candidates are all lower bounds, so the maximum is exact.
    """
    m = sd.m
    Hi = np.linalg.inv(H)
    A, b, g = sd.A, sd.b, sd.g
    lo, hi = sd.lower, sd.upper
    best = -np.inf
    for pattern in itertools.product(range(3), repeat=m):
        z = np.where(np.array(pattern) == 0, lo, hi) if m else np.zeros(0)
        free = [i for i in range(m) if pattern[i] == 2]
        if free:
            F = np.array(free)
            fixed = np.array([i for i in range(m) if pattern[i] != 2], dtype=int)
            base = rho * g + (A[fixed].T @ z[fixed] if fixed.size else 0.0)
            K = A[F] @ Hi @ A[F].T
            rhs = b[F] - A[F] @ Hi @ base
            sol, *_ = np.linalg.lstsq(K, rhs, rcond=None)
            z[F] = sol
            if np.any(z < lo - 1e-12) or np.any(z > hi + 1e-12):
                continue
        y = A.T @ z + rho * g
        best = max(best, float(-0.5 * y @ Hi @ y + z @ b))
    return best


def primal_value(d, sd: SubproblemData, H: np.ndarray, rho: float) -> float:
    r = sd.A @ d + sd.b
    return float(rho * sd.g @ d + violation_terms(r, sd.m_eq).sum() + 0.5 * d @ H @ d)


def primal_oracle(sd: SubproblemData, H: np.ndarray, rho: float) -> float:
    """Minimize ``rho g'd + sum viol(Ad + b) + 0.5 d'Hd`` by enumerating row states.

    Each row is either held at zero residual or its violation term is
    replaced by a fixed linear piece (``+r``, ``-r`` for equalities; ``+r``
    or ``0`` for inequalities). Every state gives a candidate ``d`` from an
    equality-constrained QP; the true minimizer is among them, and taking
    the minimum of the exact objective over all candidates is safe.
    """
    m, n = sd.m, sd.n
    A, b, g = sd.A, sd.b, sd.g
    states = [(0, 1, 2) if i < sd.m_eq else (0, 1, 3) for i in range(m)]  # 0 active, 1 '+', 2 '-', 3 inactive
    best = primal_value(np.zeros(n), sd, H, rho)
    for pattern in itertools.product(*states):
        lin = rho * g.copy()
        act = []
        for i, s in enumerate(pattern):
            if s == 1:
                lin += A[i]
            elif s == 2:
                lin -= A[i]
            elif s == 0:
                act.append(i)
        if act:
            Aa = A[act]
            K = np.block([[H, Aa.T], [Aa, np.zeros((len(act), len(act)))]])
            rhs = np.concatenate([-lin, -b[act]])
            sol, *_ = np.linalg.lstsq(K, rhs, rcond=None)
            d = sol[:n]
        else:
            d = np.linalg.solve(H, -lin)
        best = min(best, primal_value(d, sd, H, rho))
    return best


def random_instance(rng, n_max=4, m_max=4):
    """Random subproblem data with mixed rows plus SPD ``H_f`` and ``H_0``."""
    n = int(rng.integers(1, n_max + 1))
    m = int(rng.integers(1, m_max + 1))
    m_eq = int(rng.integers(0, m + 1))
    sd = SubproblemData.from_arrays(rng.standard_normal(n), rng.standard_normal((m, n)), rng.standard_normal(m), m_eq)
    B = rng.standard_normal((n, n))
    C = rng.standard_normal((n, n))
    Hf = B @ B.T + 0.1 * np.eye(n)
    H0 = C @ C.T + 0.1 * np.eye(n)
    return sd, Hf, H0


@pytest.fixture(scope="session")
def default_runs():
    """Default-parameter solves of every registered problem, shared across tests."""
    from dustsqp.problems import available_problems, get_problem
    from dustsqp.solver import sqp_solve

    return {name: sqp_solve(get_problem(name)) for name in available_problems()}
