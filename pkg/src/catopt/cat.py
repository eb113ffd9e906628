"""Adaptive trust-region outer loop.

Each iteration solves the subproblem to the current tolerance ``eps_k``,
evaluates the trial point, evaluates its gradient only when the trial value
is within ``b_k`` of the current value, and updates the running minimum
gradient norm ``eps_k``. The run stops as soon as ``eps_k <= eps_tol`` and
returns the point that realized it.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .core import (CountingOracle, SolveResult, SolverConfig, Status, SubproblemError,
                   validate_config, wrap_counting)
from .model import model_value, rho_classic, rho_hat
from .trs import SubproblemInput, solve_subproblem

_NORM_POWER_ITERS = 50
_NORM_RTOL = 1e-6
_NORM_ZERO = 1e-30


@dataclass
class IterateState:
    x: np.ndarray
    f_x: float
    g_x: np.ndarray
    g_x_norm: float
    r: float
    eps: float
    delta_warm: float
    x_best: np.ndarray
    f_best: float
    k: int
    t_start: float

    @property
    def grad_norm_best(self):
        return self.eps


@dataclass
class IterationRecord:
    k: int
    f: float
    grad_norm: float
    r: float
    d_norm: float
    delta: float
    hard_case: bool
    m_val: float
    f_trial: float
    b_k: float
    trial_grad_norm: Optional[float]
    rho: float
    accepted: bool
    successful: bool
    eps: float
    r_next: float
    n_grad: int


def spectral_norm(H, max_iter=_NORM_POWER_ITERS, rtol=_NORM_RTOL):
    """Power-iteration estimate of the spectral norm of a symmetric matrix,
    started from the normalized all-ones vector."""
    n = H.shape[0]
    v = np.full(n, 1.0 / math.sqrt(n))
    est = 0.0
    for _ in range(max_iter):
        w = H @ v
        new = float(np.linalg.norm(w))
        if new == 0.0:
            return 0.0
        v = w / new
        if est > 0 and abs(new - est) <= rtol * new:
            return new
        est = new
    return est


def initial_radius(g1, H1, cfg: SolverConfig) -> float:
    """``10 |g1| / |H1|``, or 1 when the Hessian norm (or gradient) vanishes."""
    if cfg.r1_override is not None:
        return float(cfg.r1_override)
    if cfg.fixed_initial_radius:
        return 1.0
    gn = float(np.linalg.norm(g1))
    hn = spectral_norm(H1)
    if hn < _NORM_ZERO or gn == 0.0:
        return 1.0
    r1 = 10.0 * gn / hn
    return r1 if math.isfinite(r1) and r1 > 0 else 1.0


def compute_b_k(eps_k, d_norm, f_k, xi=0.1, abs_floor=1e-8):
    """Allowed increase of the objective for which the trial gradient is
    still evaluated."""
    return xi * eps_k * d_norm + abs_floor * (abs(f_k) + 1.0)


def radius_update(r_k, d_norm, rho, cfg: SolverConfig) -> float:
    if cfg.conference_radius_rule:
        return cfg.omega1 * d_norm if rho >= cfg.beta else d_norm / cfg.omega1
    if rho >= cfg.beta:
        return max(cfg.omega2 * d_norm, r_k)
    return r_k / cfg.omega1


def epsilon_update(eps_k, f_k, f_trial, b_k, trial_grad_norm=None):
    """Next running-minimum gradient norm.

    Raises
    ------
    ValueError
        If the trial point qualifies but its gradient norm is missing.
    """
    if f_trial <= f_k + b_k:
        if trial_grad_norm is None:
            raise ValueError("trial gradient norm required when f_trial <= f_k + b_k")
        return min(eps_k, trial_grad_norm)
    return eps_k


def step_decision(f_k, f_trial, rho, cfg: SolverConfig) -> bool:
    return f_trial <= f_k and rho >= cfg.sigma


def _finite(*arrays):
    return all(np.all(np.isfinite(a)) for a in arrays)


def solve(oracle, x1, cfg: Optional[SolverConfig] = None, trace: bool = False) -> SolveResult:
    """Minimize ``oracle`` from ``x1``.

    Parameters
    ----------
    oracle : ObjectiveOracle
        Wrapped in a :class:`CountingOracle` unless it already is one.
    x1 : array_like
        Starting point.
    cfg : SolverConfig, optional
        Validated before use; defaults to ``SolverConfig()``.
    trace : bool
        Collect one :class:`IterationRecord` per iteration (up to
        ``cfg.trace_limit``).
    """
    cfg = validate_config(cfg if cfg is not None else SolverConfig())
    co = oracle if isinstance(oracle, CountingOracle) else wrap_counting(oracle)
    t0 = time.perf_counter()
    x = np.array(x1, dtype=float).reshape(-1)
    if x.shape[0] != co.dim:
        raise ValueError(f"x1 has {x.shape[0]} entries, oracle expects {co.dim}")
    records = [] if trace else None

    f = co.eval_f(x)
    if not math.isfinite(f):
        raise ValueError("objective is not finite at the starting point")
    g = co.eval_grad(x)
    gn = float(np.linalg.norm(g))
    state = IterateState(x=x, f_x=f, g_x=g, g_x_norm=gn, r=1.0, eps=gn, delta_warm=0.0,
                         x_best=x, f_best=f, k=0, t_start=t0)

    def finish(status):
        return SolveResult(status=status, x_final=state.x_best.copy(), f_final=state.f_best,
                           grad_norm_final=state.eps, iterations=state.k,
                           counters=co.counters(), wall_time=time.perf_counter() - t0,
                           trace=records)

    if not math.isfinite(gn):
        return finish(Status.SUBPROBLEM_ERROR)
    if state.eps <= cfg.eps_tol:
        return finish(Status.OPTIMAL)

    H = co.eval_hess(x)
    if not _finite(H):
        return finish(Status.SUBPROBLEM_ERROR)
    state.r = initial_radius(g, H, cfg)
    need_hess = False

    while state.k < cfg.max_iter:
        if time.perf_counter() - t0 > cfg.max_time:
            return finish(Status.MAX_TIME)
        if need_hess:
            H = co.eval_hess(state.x)
            need_hess = False
            if not _finite(H):
                return finish(Status.SUBPROBLEM_ERROR)
        state.k += 1

        inp = SubproblemInput(g=state.g_x, H=H, r=state.r, eps_k=state.eps,
                              delta_warm=state.delta_warm, gamma1=cfg.gamma1,
                              gamma2=cfg.gamma2, gamma3=cfg.gamma3,
                              rng_seed=[cfg.seed, state.k])
        try:
            sol = solve_subproblem(inp)
        except SubproblemError as exc:
            co.n_fact += exc.factorizations
            return finish(Status.SUBPROBLEM_ERROR)
        co.n_fact += sol.factorizations_used
        d = sol.d
        d_norm = float(np.linalg.norm(d))
        if d_norm < cfg.step_size_limit:
            return finish(Status.STEP_SIZE_LIMIT)

        x_trial = state.x + d
        f_trial = co.eval_f(x_trial)
        if not math.isfinite(f_trial):
            return finish(Status.SUBPROBLEM_ERROR)
        b_k = compute_b_k(state.eps, d_norm, state.f_x, cfg.b_k_xi, cfg.b_k_abs_floor)
        m_val = model_value(state.g_x, H, d)

        g_trial = None
        gtn = None
        if f_trial <= state.f_x + b_k:
            g_trial = co.eval_grad(x_trial)
            gtn = float(np.linalg.norm(g_trial))
            if not math.isfinite(gtn):
                return finish(Status.SUBPROBLEM_ERROR)

        if cfg.use_classic_rho:
            rho = rho_classic(state.f_x, f_trial, m_val)
        else:
            min_gn = state.g_x_norm if gtn is None else min(state.g_x_norm, gtn)
            rho = rho_hat(state.f_x, f_trial, m_val, min_gn, d_norm, cfg.theta)

        eps_next = epsilon_update(state.eps, state.f_x, f_trial, b_k, gtn)
        if eps_next < state.eps:
            state.x_best, state.f_best = x_trial, f_trial
        state.eps = eps_next
        accepted = step_decision(state.f_x, f_trial, rho, cfg)
        r_next = radius_update(state.r, d_norm, rho, cfg)

        if records is not None and len(records) < cfg.trace_limit:
            records.append(IterationRecord(
                k=state.k, f=state.f_x, grad_norm=state.g_x_norm, r=state.r, d_norm=d_norm,
                delta=sol.delta, hard_case=sol.hard_case, m_val=m_val, f_trial=f_trial,
                b_k=b_k, trial_grad_norm=gtn, rho=rho, accepted=accepted,
                successful=rho >= cfg.beta, eps=state.eps, r_next=r_next, n_grad=co.n_grad))

        if accepted:
            state.x, state.f_x, state.g_x, state.g_x_norm = x_trial, f_trial, g_trial, gtn
            need_hess = True
        state.r = r_next
        state.delta_warm = sol.delta
        if state.eps <= cfg.eps_tol:
            return finish(Status.OPTIMAL)
        if not (state.r > 0 and math.isfinite(state.r)):
            return finish(Status.SUBPROBLEM_ERROR)

    return finish(Status.MAX_ITERATIONS)
