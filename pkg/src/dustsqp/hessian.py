"""Positive-definite Hessian models ``H_0`` and ``H_rho = rho H_f + H_0``.

Two backends share one small interface (``matvec``, ``solve``, ``at``):

* :class:`DenseHessian` keeps eigenvalue-modified dense ``H_f`` and ``H_0``
  and factors ``H_rho`` with Cholesky.
* :class:`LowRankHessian` keeps compact forms
  ``H_rho = sigma I + Psi Sigma^{-1} Psi^T`` and
  ``H_0 = gamma I + Phi Gamma^{-1} Phi^T`` and applies inverses through the
  Sherman-Morrison-Woodbury identity, including after ``rho`` is lowered.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
import scipy.linalg as sla

logger = logging.getLogger(__name__)

CURVATURE_EPS = 1e-8


class HessianContractError(np.linalg.LinAlgError):
    """A Hessian model that must be positive definite is not."""


def build_exact_modified(H_raw, tau_eig: float = 1e-4, t_cond: float = 1e6) -> np.ndarray:
    """Raise eigenvalues below ``tau_eig`` and cap the condition number at ``t_cond``.

    The condition cap replaces ``H`` by ``a H + (1 - a) I`` with the largest
    ``a`` in [0, 1] whose condition number does not exceed ``t_cond``.
    """
    if tau_eig <= 0:
        raise ValueError("tau_eig must be positive")
    if t_cond < 1:
        raise ValueError("t_cond must be at least 1")
    H = np.asarray(H_raw, dtype=float)
    H = 0.5 * (H + H.T)
    try:
        lam, U = np.linalg.eigh(H)
    except np.linalg.LinAlgError as exc:  # pragma: no cover - LAPACK failure
        raise HessianContractError(f"eigendecomposition failed: {exc}") from exc
    lam = np.maximum(lam, tau_eig)
    lo, hi = lam[0], lam[-1]
    if hi > t_cond * lo:
        # (a hi + 1 - a) / (a lo + 1 - a) = t_cond, solved for a
        a = (t_cond - 1.0) / ((hi - t_cond * lo) + (t_cond - 1.0))
        lam = a * lam + (1.0 - a)
    return (U * lam) @ U.T


def _solve_small(K: np.ndarray, rhs: np.ndarray, what: str) -> np.ndarray:
    """Solve a small r x r system, retrying once with a tiny diagonal jitter."""
    if K.shape[0] == 0:
        return np.zeros((0,) + rhs.shape[1:])
    try:
        return np.linalg.solve(K, rhs)
    except np.linalg.LinAlgError:
        jitter = 1e-14 * max(1.0, float(np.abs(K).max()))
        try:
            return np.linalg.solve(K + jitter * np.eye(K.shape[0]), rhs)
        except np.linalg.LinAlgError as exc:
            raise HessianContractError(f"singular {what} system") from exc


@dataclass(frozen=True)
class CompactFactor:
    """``scalar * I + U S^{-1} U^T`` with ``S`` invertible (possibly indefinite)."""

    scalar: float
    U: np.ndarray
    S: np.ndarray
    skipped: int = 0

    @property
    def rank(self) -> int:
        return self.U.shape[1]

    def matvec(self, z: np.ndarray) -> np.ndarray:
        out = self.scalar * z
        if self.rank:
            out = out + self.U @ np.linalg.solve(self.S, self.U.T @ z)
        return out

    def dense(self) -> np.ndarray:
        n = self.U.shape[0]
        M = self.scalar * np.eye(n)
        if self.rank:
            M = M + self.U @ np.linalg.solve(self.S, self.U.T)
        return M


def lbfgs_update(history, memory: int, n: int | None = None, eps: float = CURVATURE_EPS) -> CompactFactor:
    """Compact BFGS matrix from curvature pairs ``(s, y)``, newest last.

    Pairs with ``<s, y> <= eps |s| |y|`` are skipped (and counted). Only the
    newest ``memory`` accepted pairs are used. The base scalar is
    ``<y, y> / <s, y>`` of the newest accepted pair, or 1 without pairs.
    """
    accepted = []
    skipped = 0
    for s, y in history:
        s = np.asarray(s, dtype=float)
        y = np.asarray(y, dtype=float)
        sy = float(s @ y)
        if sy <= eps * np.linalg.norm(s) * np.linalg.norm(y) or sy <= 0.0:
            skipped += 1
            continue
        accepted.append((s, y))
        if n is None:
            n = s.size
    if n is None:
        raise ValueError("cannot infer dimension from an empty history; pass n")
    accepted = accepted[-memory:] if memory > 0 else []
    if not accepted:
        return CompactFactor(1.0, np.zeros((n, 0)), np.zeros((0, 0)), skipped)

    S = np.column_stack([s for s, _ in accepted])
    Y = np.column_stack([y for _, y in accepted])
    s_new, y_new = accepted[-1]
    delta = float(y_new @ y_new) / float(s_new @ y_new)
    SY = S.T @ Y
    L = np.tril(SY, -1)
    D = np.diag(np.diag(SY))
    # B = delta I - [delta S, Y] K^{-1} [delta S, Y]^T with
    # K = [[delta S'S, L], [L', -D]]
    K = np.block([[delta * (S.T @ S), L], [L.T, -D]])
    U = np.hstack([delta * S, Y])
    return CompactFactor(delta, U, -K, skipped)


@dataclass(frozen=True)
class InverseOperator:
    """``H^{-1} z = (z - U T^T z) / scale``."""

    scale: float
    U: np.ndarray
    T: np.ndarray

    def apply(self, z: np.ndarray) -> np.ndarray:
        if self.U.shape[1] == 0:
            return z / self.scale
        return (z - self.U @ (self.T.T @ z)) / self.scale


# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class DenseHessian:
    """Dense ``H_f`` and ``H_0`` (already modified to be positive definite)."""

    Hf: np.ndarray
    H0: np.ndarray
    rho_built: float
    backend: str = field(default="exact", init=False)

    def at(self, rho: float) -> "DenseHessian":
        if rho == self.rho_built:
            return self
        return DenseHessian(self.Hf, self.H0, rho)

    @cached_property
    def H_rho(self) -> np.ndarray:
        return self.rho_built * self.Hf + self.H0

    @cached_property
    def _chol_rho(self):
        return _cholesky(self.H_rho, "H_rho")

    @cached_property
    def _chol_zero(self):
        return _cholesky(self.H0, "H_0")

    def matrix(self, zero: bool = False) -> np.ndarray:
        return self.H0 if zero else self.H_rho

    def matvec(self, z, zero: bool = False) -> np.ndarray:
        return self.matrix(zero) @ z

    def solve(self, z, zero: bool = False) -> np.ndarray:
        return sla.cho_solve(self._chol_zero if zero else self._chol_rho, z)


def _cholesky(M: np.ndarray, what: str):
    try:
        return sla.cho_factor(M, lower=True)
    except np.linalg.LinAlgError as exc:
        raise HessianContractError(f"{what} is not positive definite") from exc


@dataclass(frozen=True)
class LowRankHessian:
    """Compact ``H_rho`` / ``H_0`` pair.

    ``sigma, Psi, Sigma`` describe ``H_rho`` at ``rho_base``; a lowered
    penalty ``rho_built = tau * rho_base`` is represented through
    ``H_rho_built = tau H_rho_base + (1 - tau) H_0`` without refactoring.
    """

    sigma: float
    Psi: np.ndarray
    Sigma: np.ndarray
    gamma: float
    Phi: np.ndarray
    Gamma: np.ndarray
    rho_base: float
    tau: float = 1.0
    backend: str = field(default="lbfgs", init=False)

    @classmethod
    def from_factors(cls, hf: CompactFactor, h0: CompactFactor, rho: float) -> "LowRankHessian":
        """Combine factors of ``H_f`` and ``H_0`` into ``H_rho = rho H_f + H_0``."""
        if rho <= 0:
            raise ValueError("rho must be positive")
        r_f, r_0 = hf.rank, h0.rank
        Sigma = np.zeros((r_f + r_0, r_f + r_0))
        Sigma[:r_f, :r_f] = hf.S / rho
        Sigma[r_f:, r_f:] = h0.S
        return cls(
            sigma=rho * hf.scalar + h0.scalar,
            Psi=np.hstack([hf.U, h0.U]),
            Sigma=Sigma,
            gamma=h0.scalar,
            Phi=h0.U,
            Gamma=h0.S,
            rho_base=rho,
        )

    @property
    def rho_built(self) -> float:
        return self.tau * self.rho_base

    @property
    def sigma_bar(self) -> float:
        return self.tau * self.sigma + (1.0 - self.tau) * self.gamma

    def at(self, rho: float) -> "LowRankHessian":
        if rho == self.rho_built:
            return self
        if rho == self.rho_base:
            return LowRankHessian(self.sigma, self.Psi, self.Sigma, self.gamma, self.Phi, self.Gamma, self.rho_base)
        if not 0.0 < rho < self.rho_base:
            raise ValueError(f"can only lower rho below the base value {self.rho_base}, got {rho}")
        return LowRankHessian(
            self.sigma, self.Psi, self.Sigma, self.gamma, self.Phi, self.Gamma, self.rho_base, rho / self.rho_base
        )

    def matvec(self, z, zero: bool = False) -> np.ndarray:
        if zero:
            return self._h0_matvec(z)
        tau = self.tau
        out = self.sigma_bar * z
        if self.Psi.shape[1]:
            out = out + tau * (self.Psi @ np.linalg.solve(self.Sigma, self.Psi.T @ z))
        if tau < 1.0 and self.Phi.shape[1]:
            out = out + (1.0 - tau) * (self.Phi @ np.linalg.solve(self.Gamma, self.Phi.T @ z))
        return out

    def _h0_matvec(self, z):
        out = self.gamma * z
        if self.Phi.shape[1]:
            out = out + self.Phi @ np.linalg.solve(self.Gamma, self.Phi.T @ z)
        return out

    def solve(self, z, zero: bool = False) -> np.ndarray:
        return self.inverse_operator(zero).apply(z)

    def inverse_operator(self, zero: bool = False) -> InverseOperator:
        return self._inv_zero if zero else self._inv_rho

    @cached_property
    def _inv_zero(self) -> InverseOperator:
        # Theta_1^T = (gamma Gamma + Phi^T Phi)^{-1} Phi^T
        K = self.gamma * self.Gamma + self.Phi.T @ self.Phi
        theta1 = _solve_small(K, self.Phi.T, "H_0 inverse").T
        return InverseOperator(self.gamma, self.Phi, theta1)

    @cached_property
    def _inv_rho(self) -> InverseOperator:
        if self.tau == 1.0:
            # Theta_2^T = (sigma Sigma + Psi^T Psi)^{-1} Psi^T
            K = self.sigma * self.Sigma + self.Psi.T @ self.Psi
            theta2 = _solve_small(K, self.Psi.T, "H_rho inverse").T
            return InverseOperator(self.sigma, self.Psi, theta2)
        tau = self.tau
        sbar = self.sigma_bar
        # H_tau^{-1} = (I - Psi Theta_3^T) / sbar
        K3 = (sbar / tau) * self.Sigma + self.Psi.T @ self.Psi
        theta3 = _solve_small(K3, self.Psi.T, "H_tau inverse").T
        if self.Phi.shape[1] == 0:
            return InverseOperator(sbar, self.Psi, theta3)
        G = (self.Phi - self.Psi @ (theta3.T @ self.Phi)) / sbar  # H_tau^{-1} Phi
        # Theta_4^T = [Gamma / (1 - tau) + Phi^T H_tau^{-1} Phi]^{-1} Phi^T
        M = self.Gamma / (1.0 - tau) + self.Phi.T @ G
        T4 = _solve_small(M.T, G.T, "rescaled H_rho inverse").T  # G M^{-T}
        return InverseOperator(sbar, np.hstack([self.Psi, sbar * G]), np.hstack([theta3, T4]))

    def dense(self, zero: bool = False) -> np.ndarray:
        n = self.Psi.shape[0]
        return np.column_stack([self.matvec(e, zero) for e in np.eye(n)])


HessianModel = DenseHessian | LowRankHessian


def inverse_apply(H: HessianModel, z, zero: bool = False) -> np.ndarray:
    """``H_rho^{-1} z`` at the model's current penalty (``H_0^{-1} z`` if ``zero``)."""
    return H.solve(np.asarray(z, dtype=float), zero)


def rescale_rho(H: LowRankHessian, rho_bar: float) -> LowRankHessian:
    """Return the compact model at a lowered penalty ``rho_bar``.

    ``rho_bar`` equal to the current value is a no-op; a value above it or
    nonpositive violates the precondition.
    """
    if rho_bar == H.rho_built:
        return H
    if not 0.0 < rho_bar < H.rho_built:
        raise ValueError(f"rho_bar must lie in (0, {H.rho_built}), got {rho_bar}")
    return H.at(rho_bar)


def eigen_bounds(H: HessianModel, zero: bool = False) -> tuple[float, float]:
    """Extreme eigenvalues of ``H_rho`` (or ``H_0``); exact for both backends."""
    if isinstance(H, DenseHessian):
        lam = np.linalg.eigvalsh(H.matrix(zero))
        return float(lam[0]), float(lam[-1])
    n = H.Psi.shape[0]
    if zero:
        base, blocks = H.gamma, [(H.Phi, np.linalg.inv(H.Gamma) if H.Phi.shape[1] else H.Gamma)]
    else:
        base = H.sigma_bar
        blocks = []
        if H.Psi.shape[1]:
            blocks.append((H.Psi, H.tau * np.linalg.inv(H.Sigma)))
        if H.tau < 1.0 and H.Phi.shape[1]:
            blocks.append((H.Phi, (1.0 - H.tau) * np.linalg.inv(H.Gamma)))
    blocks = [(U, Sinv) for U, Sinv in blocks if U.shape[1]]
    if not blocks:
        return float(base), float(base)
    U = np.hstack([b[0] for b in blocks])
    Sinv = sla.block_diag(*[b[1] for b in blocks])
    # nonzero spectrum of U Sinv U^T equals that of the small matrix Sinv U^T U
    mu = np.linalg.eigvals(Sinv @ (U.T @ U)).real
    if U.shape[1] < n:
        mu = np.append(mu, 0.0)
    return float(base + mu.min()), float(base + mu.max())
