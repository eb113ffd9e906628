"""Adaptive trust-region minimization with an inexact subproblem solver."""

from .baselines import ArmijoConfig, gd_solve
from .cat import solve
from .core import (ConfigError, CountingOracle, ObjectiveOracle, SolveResult, SolverConfig,
                   Status, SubproblemError, validate_config, wrap_counting)
from .problems import ProblemSpec, finite_diff_check, load_quadratic, make_problem
from .trs import SubproblemInput, SubproblemSolution, solve_subproblem

__all__ = [
    "ArmijoConfig", "ConfigError", "CountingOracle", "ObjectiveOracle", "ProblemSpec",
    "SolveResult", "SolverConfig", "Status", "SubproblemError", "SubproblemInput",
    "SubproblemSolution", "finite_diff_check", "gd_solve", "load_quadratic", "make_problem",
    "solve", "solve_subproblem", "validate_config", "wrap_counting",
]
