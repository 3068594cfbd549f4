"""Solver parameters."""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass


class ConfigError(ValueError):
    """Invalid parameter value or combination."""


@dataclass(frozen=True)
class SolverConfig:
    gamma_ls: float = 0.5
    theta_rho: float = 0.9
    theta_omega: float = 0.7
    theta_alpha: float = 1e-4
    beta_v: float = 0.1
    beta_phi: float = 0.7
    beta_l: float | None = None  # None: 0.6 * beta_phi * (1 - beta_v)
    rho_init: float = 1.0
    rho_min: float = 1e-12  # the in-solver update never goes below this
    omega_init: float = 1e-2
    tol_v: float = 1e-5
    tol_opt: float = 1e-4
    tol_fea: float = 1e-4
    tol_infeasible_v: float = 1e-3  # infeasibility is only declared above this violation
    max_outer: int = 200
    max_inner_sweeps: int = 100_000
    max_backtracks: int = 60
    max_null_retries: int = 10
    tau_eig: float = 1e-4
    t_cond: float = 1e6
    hessian_backend: str = "exact"  # "exact" or "lbfgs"
    lbfgs_memory: int = 10
    feasibility_dual: str = "separate"  # "separate" or "reuse_zeta"
    multiplier_rule: str = "qp"
    sweep_order: str = "ascending"  # or "shuffled" (fixed permutation per subproblem)
    sweep_seed: int = 0
    trace_sweeps: bool = False

    def __post_init__(self):
        if self.beta_l is None:
            object.__setattr__(self, "beta_l", 0.6 * self.beta_phi * (1.0 - self.beta_v))
        self.validate()

    def validate(self) -> None:
        def open_unit(name):
            val = getattr(self, name)
            if not 0.0 < val < 1.0:
                raise ConfigError(f"{name} must lie in (0, 1), got {val}")

        for name in ("gamma_ls", "theta_rho", "theta_omega", "theta_alpha", "beta_v", "beta_phi"):
            open_unit(name)
        if not self.beta_v < self.beta_phi:
            raise ConfigError(f"beta_v < beta_phi is required, got beta_v={self.beta_v}, beta_phi={self.beta_phi}")
        upper = self.beta_phi * (1.0 - self.beta_v)
        if not 0.0 < self.beta_l < upper:
            raise ConfigError(f"beta_l must lie in (0, beta_phi*(1-beta_v)={upper:.6g}), got {self.beta_l}")
        for name in ("rho_init", "omega_init", "tol_v", "tol_opt", "tol_fea", "tol_infeasible_v", "tau_eig"):
            if not getattr(self, name) > 0.0:
                raise ConfigError(f"{name} must be positive, got {getattr(self, name)}")
        if not 0.0 <= self.rho_min < self.rho_init:
            raise ConfigError(f"rho_min must lie in [0, rho_init), got {self.rho_min}")
        if self.t_cond < 1.0:
            raise ConfigError(f"t_cond must be at least 1, got {self.t_cond}")
        for name in ("max_outer", "max_inner_sweeps", "max_backtracks", "lbfgs_memory"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be at least 1, got {getattr(self, name)}")
        if self.max_null_retries < 0:
            raise ConfigError("max_null_retries must be nonnegative")
        if self.hessian_backend not in ("exact", "lbfgs"):
            raise ConfigError(f"hessian_backend must be 'exact' or 'lbfgs', got {self.hessian_backend!r}")
        if self.feasibility_dual not in ("separate", "reuse_zeta"):
            raise ConfigError(f"feasibility_dual must be 'separate' or 'reuse_zeta', got {self.feasibility_dual!r}")
        if self.sweep_order not in ("ascending", "shuffled"):
            raise ConfigError(f"sweep_order must be 'ascending' or 'shuffled', got {self.sweep_order!r}")
        if self.multiplier_rule != "qp":
            raise ConfigError(f"multiplier_rule must be 'qp', got {self.multiplier_rule!r}")

    def replace(self, **changes) -> "SolverConfig":
        if "beta_phi" in changes or "beta_v" in changes:
            changes.setdefault("beta_l", None)
        return dataclasses.replace(self, **changes)


def field_types() -> dict[str, type]:
    """Map each field name to the scalar type used when parsing text values."""
    out = {}
    for f in dataclasses.fields(SolverConfig):
        t = f.type if isinstance(f.type, str) else f.type.__name__
        if t.startswith("float"):
            out[f.name] = float
        elif t.startswith("int"):
            out[f.name] = int
        elif t.startswith("bool"):
            out[f.name] = bool
        else:
            out[f.name] = str
    return out
