"""Shared domain types: oracles, solver configuration, statuses and errors."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, fields
from fractions import Fraction
from typing import Callable, Optional

import numpy as np


class ConfigError(ValueError):
    """Raised when a solver configuration violates a parameter requirement."""


class SubproblemError(RuntimeError):
    """The trust-region subproblem solver could not certify a direction.

    ``factorizations`` carries the number of Cholesky attempts made before
    giving up so callers can still account for them.
    """

    def __init__(self, message, factorizations=0):
        super().__init__(message)
        self.factorizations = factorizations


class Status(enum.Enum):
    OPTIMAL = "Optimal"
    MAX_ITERATIONS = "MaxIterations"
    MAX_TIME = "MaxTime"
    STEP_SIZE_LIMIT = "StepSizeLimit"
    SUBPROBLEM_ERROR = "SubproblemError"
    CONFIG_ERROR = "ConfigError"

    def __str__(self):
        return self.value


class ObjectiveOracle:
    """Twice-differentiable objective given by value, gradient and Hessian callables.

    Parameters
    ----------
    dim : int
        Number of variables.
    f, grad, hess : callable
        ``f(x) -> float``, ``grad(x) -> (dim,)`` and ``hess(x) -> (dim, dim)``.
        Hessians are symmetrized as ``(H + H.T) / 2`` on the way out.
    """

    def __init__(self, dim: int, f: Callable, grad: Callable, hess: Callable):
        if int(dim) != dim or dim < 1:
            raise ValueError(f"dim must be a positive integer, got {dim!r}")
        self.dim = int(dim)
        self._f = f
        self._grad = grad
        self._hess = hess

    def eval_f(self, x) -> float:
        return float(self._f(x))

    def eval_grad(self, x) -> np.ndarray:
        return np.asarray(self._grad(x), dtype=float).reshape(self.dim)

    def eval_hess(self, x) -> np.ndarray:
        H = np.asarray(self._hess(x), dtype=float).reshape(self.dim, self.dim)
        return 0.5 * (H + H.T)


class CountingOracle(ObjectiveOracle):
    """Wraps an oracle and counts evaluations.

    ``n_fact`` is not touched by evaluations; the solvers add the number of
    Cholesky attempts reported by the subproblem solver.
    """

    def __init__(self, inner: ObjectiveOracle):
        self.inner = inner
        self.dim = inner.dim
        self.reset()

    def reset(self):
        self.n_f = 0
        self.n_grad = 0
        self.n_hess = 0
        self.n_fact = 0

    def eval_f(self, x):
        self.n_f += 1
        return self.inner.eval_f(x)

    def eval_grad(self, x):
        self.n_grad += 1
        return self.inner.eval_grad(x)

    def eval_hess(self, x):
        self.n_hess += 1
        return self.inner.eval_hess(x)

    def counters(self):
        return Counters(self.n_f, self.n_grad, self.n_hess, self.n_fact)


@dataclass(frozen=True)
class Counters:
    n_f: int = 0
    n_grad: int = 0
    n_hess: int = 0
    n_fact: int = 0


def wrap_counting(oracle: ObjectiveOracle) -> CountingOracle:
    """Return a fresh counting wrapper (all counters zero) around ``oracle``."""
    return CountingOracle(oracle)


@dataclass(frozen=True)
class SolverConfig:
    """Parameters of the adaptive trust-region method plus run limits.

    Defaults are the values used for the benchmark experiments
    (sigma=0, beta=0.1, theta=0.1, omega1=8, omega2=16, gamma1=0.01,
    gamma2=0.8, gamma3=0.5) with a 1e-5 gradient tolerance.
    """

    theta: float = 0.1
    beta: float = 0.1
    sigma: float = 0.0
    omega1: float = 8.0
    omega2: float = 16.0
    gamma1: float = 0.01
    gamma2: float = 0.8
    gamma3: float = 0.5
    eps_tol: float = 1e-5
    r1_override: Optional[float] = None
    max_iter: int = 100000
    max_time: float = 18000.0
    step_size_limit: float = 2e-16
    b_k_xi: float = 0.1
    b_k_abs_floor: float = 1e-8
    use_classic_rho: bool = False
    conference_radius_rule: bool = False
    fixed_initial_radius: bool = False
    seed: int = 0
    trace_limit: int = 1_000_000

    def replace(self, **changes) -> "SolverConfig":
        values = {f.name: getattr(self, f.name) for f in fields(self)}
        values.update(changes)
        return SolverConfig(**values)


def gamma1_upper_bound(beta: float, theta: float, gamma3: float) -> Fraction:
    """Exact rational value of 1/2 (1 - beta theta / (gamma3 (1 - beta)))."""
    b, t, g3 = Fraction(beta), Fraction(theta), Fraction(gamma3)
    return Fraction(1, 2) * (1 - b * t / (g3 * (1 - b)))


def validate_config(cfg: SolverConfig) -> SolverConfig:
    """Return ``cfg`` unchanged if every parameter requirement holds.

    The gamma1 bound is checked in exact rational arithmetic on the binary
    values of the floats, so strictness is never lost to rounding.

    Raises
    ------
    ConfigError
        Naming the first violated constraint.
    """
    def need(ok, what):
        if not ok:
            raise ConfigError(what)

    for name in ("theta", "beta", "sigma", "omega1", "omega2", "gamma1", "gamma2",
                 "gamma3", "eps_tol", "max_time", "step_size_limit", "b_k_xi", "b_k_abs_floor"):
        value = getattr(cfg, name)
        need(isinstance(value, (int, float)) and not math.isnan(value), f"{name} must be a number")

    need(0 < cfg.theta < 1, "theta in (0, 1)")
    need(0 < cfg.beta < 1, "beta in (0, 1)")
    need(0 <= cfg.sigma <= cfg.beta, "sigma in [0, beta]")
    need(1 < cfg.omega1 < math.inf, "omega1 in (1, inf)")
    need(cfg.omega1 <= cfg.omega2 < math.inf, "omega2 in [omega1, inf)")
    need(1 / Fraction(cfg.omega1) < Fraction(cfg.gamma2) <= 1, "gamma2 in (1/omega1, 1]")
    need(0 < cfg.gamma3 <= 1, "gamma3 in (0, 1]")
    bound = gamma1_upper_bound(cfg.beta, cfg.theta, cfg.gamma3)
    need(0 <= Fraction(cfg.gamma1) < bound,
         f"0 <= gamma1 < 1/2 (1 - beta theta / (gamma3 (1 - beta))) = {float(bound):.17g}")
    need(cfg.eps_tol >= 0, "eps_tol >= 0")
    need(cfg.r1_override is None or (math.isfinite(cfg.r1_override) and cfg.r1_override > 0),
         "r1_override > 0")
    need(int(cfg.max_iter) == cfg.max_iter and cfg.max_iter >= 1, "max_iter positive integer")
    need(cfg.max_time > 0, "max_time > 0")
    need(cfg.step_size_limit > 0, "step_size_limit > 0")
    need(cfg.b_k_xi > 0, "b_k xi > 0")
    need(cfg.b_k_abs_floor >= 0, "b_k absolute floor coefficient >= 0")
    need(cfg.trace_limit >= 0, "trace_limit >= 0")
    return cfg


@dataclass
class SolveResult:
    """Outcome of one solver run.

    ``x_final`` is the point realizing the reported gradient norm, which for
    the trust-region solver may be a trial point that was never accepted.
    """

    status: Status
    x_final: np.ndarray
    f_final: float
    grad_norm_final: float
    iterations: int
    counters: Counters
    wall_time: float
    trace: Optional[list] = field(default=None, repr=False)

    @property
    def success(self) -> bool:
        return self.status is Status.OPTIMAL
