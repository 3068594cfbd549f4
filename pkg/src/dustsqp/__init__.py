"""Penalty SQP with a penalty parameter updated inside a dual coordinate-descent QP solver."""

from .config import ConfigError, SolverConfig
from .dust import Decision, SubproblemResult, solve_subproblem
from .problems import NlpProblem, available_problems, get_problem, make_infeasible
from .solver import SolveResult, Status, sqp_solve

__all__ = [
    "ConfigError",
    "Decision",
    "NlpProblem",
    "SolveResult",
    "SolverConfig",
    "Status",
    "SubproblemResult",
    "available_problems",
    "get_problem",
    "make_infeasible",
    "solve_subproblem",
    "sqp_solve",
]
