"""Gradient descent with Armijo backtracking.

The step size is warm-started from the previous accepted step and can only
shrink: ``eta_k = eta_{k-1} mu^i`` for the smallest ``i >= 0`` that gives
sufficient decrease ``f(x - eta g) <= f(x) - c eta |g|^2``.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass
from typing import NamedTuple, Optional

import numpy as np

from .core import CountingOracle, SolveResult, Status, wrap_counting

MAX_BACKTRACKS = 100


class ArmijoFailure(RuntimeError):
    pass


@dataclass(frozen=True)
class ArmijoConfig:
    eta0: float = 1.0
    c: float = 1e-4
    mu: float = 0.5
    eps_tol: float = 1e-5
    max_iter: int = 100000
    max_time: float = 18000.0

    def __post_init__(self):
        if not self.eta0 > 0:
            raise ValueError("eta0 must be positive")
        if not 0 < self.c < 1:
            raise ValueError("c must lie in (0, 1)")
        if not 0 < self.mu < 1:
            raise ValueError("mu must lie in (0, 1)")
        if not self.max_iter >= 1:
            raise ValueError("max_iter must be positive")


class ArmijoStep(NamedTuple):
    eta: float
    x_next: np.ndarray
    f_next: float
    backtracks: int


def armijo_step(oracle, x, f_x, g, eta_prev, c, mu) -> ArmijoStep:
    """Backtrack from ``eta_prev`` until sufficient decrease holds.

    One function evaluation per tried step size.

    Raises
    ------
    ArmijoFailure
        After ``MAX_BACKTRACKS`` reductions without sufficient decrease.
    """
    gg = float(g @ g)
    eta = eta_prev
    for i in range(MAX_BACKTRACKS + 1):
        x_next = x - eta * g
        f_next = oracle.eval_f(x_next)
        if f_next <= f_x - c * eta * gg:
            return ArmijoStep(eta, x_next, f_next, i)
        eta *= mu
    raise ArmijoFailure(f"no sufficient decrease after {MAX_BACKTRACKS} backtracks")


def gd_solve(oracle, x1, acfg: Optional[ArmijoConfig] = None, trace: bool = False) -> SolveResult:
    acfg = acfg or ArmijoConfig()
    co = oracle if isinstance(oracle, CountingOracle) else wrap_counting(oracle)
    t0 = time.perf_counter()
    x = np.array(x1, dtype=float).reshape(-1)
    f = co.eval_f(x)
    if not math.isfinite(f):
        raise ValueError("objective is not finite at the starting point")
    g = co.eval_grad(x)
    gn = float(np.linalg.norm(g))
    best = [x, f, gn]
    records = [] if trace else None
    k = 0

    def finish(status):
        return SolveResult(status, best[0].copy(), best[1], best[2], k, co.counters(),
                           time.perf_counter() - t0, records)

    eta = acfg.eta0
    while True:
        if not math.isfinite(gn):
            return finish(Status.SUBPROBLEM_ERROR)
        if gn <= acfg.eps_tol:
            return finish(Status.OPTIMAL)
        if k >= acfg.max_iter:
            return finish(Status.MAX_ITERATIONS)
        if time.perf_counter() - t0 > acfg.max_time:
            return finish(Status.MAX_TIME)
        try:
            step = armijo_step(co, x, f, g, eta, acfg.c, acfg.mu)
        except ArmijoFailure:
            return finish(Status.SUBPROBLEM_ERROR)
        k += 1
        if records is not None:
            records.append({"k": k, "f": f, "grad_norm": gn, "eta": step.eta,
                            "f_next": step.f_next, "backtracks": step.backtracks})
        eta = step.eta
        x, f = step.x_next, step.f_next
        g = co.eval_grad(x)
        gn = float(np.linalg.norm(g))
        if gn < best[2]:
            best = [x, f, gn]
