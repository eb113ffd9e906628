"""Inexact trust-region subproblem solver.

Finds a direction ``d`` and multiplier ``delta >= 0`` with

    |Hd + g + delta d| <= gamma1 eps        (a)
    gamma2 delta r     <= delta |d|         (b)
    |d|                <= r                 (c)
    M(d)               <= -gamma3 delta/2 |d|^2   (d)

where ``M(d) = 1/2 d'Hd + g'd``. A Newton step is tried first; otherwise a
three-valued sign function of ``delta`` is bracketed and bisected on, with
inverse power iteration to handle the hard case. All loops are capped at
``MAX_LOOP`` iterations.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple, Optional

import numpy as np
from scipy.linalg import LinAlgError, cho_factor, cho_solve

from .core import SubproblemError
from .model import model_gradient, model_value

MAX_LOOP = 100


@dataclass
class SubproblemInput:
    g: np.ndarray
    H: np.ndarray
    r: float
    eps_k: float
    delta_warm: float = 0.0
    gamma1: float = 0.01
    gamma2: float = 0.8
    gamma3: float = 0.5
    rng_seed: object = 0
    factorizations: int = 0
    _cache: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        self.g = np.asarray(self.g, dtype=float)
        self.H = np.asarray(self.H, dtype=float)
        if not self.r > 0:
            raise ValueError(f"trust radius must be positive, got {self.r}")
        if not self.delta_warm >= 0:
            raise ValueError(f"warm-start delta must be nonnegative, got {self.delta_warm}")

    @property
    def tol(self):
        return self.gamma1 * self.eps_k


@dataclass
class SubproblemSolution:
    d: np.ndarray
    delta: float
    hard_case: bool
    factorizations_used: int


class PhiEval(NamedTuple):
    sign: int
    delta: float
    d: Optional[np.ndarray]
    factor: Optional[tuple]
    # multiplier certifying (a)-(d) when sign == 0: delta itself or 0
    certified_delta: Optional[float]


class BisectionResult(NamedTuple):
    delta_lo: float
    delta_mid: float
    delta_hi: float
    d_mid: Optional[np.ndarray]
    d_hi: np.ndarray
    hard_case: bool
    certified_delta: Optional[float]
    factor_hi: Optional[tuple]


def criteria_margins(g, H, d, delta, r, eps_k, gamma1, gamma2, gamma3):
    """Left minus right side of each of the four termination inequalities.

    A solution is certified when all four margins are ``<= 0``.
    """
    nd = float(np.linalg.norm(d))
    return (
        float(np.linalg.norm(model_gradient(g, H, d, delta))) - gamma1 * eps_k,
        gamma2 * delta * r - delta * nd,
        nd - r,
        model_value(g, H, d) + gamma3 * 0.5 * delta * nd * nd,
    )


def satisfies_criteria(g, H, d, delta, r, eps_k, gamma1, gamma2, gamma3):
    if not np.all(np.isfinite(d)):
        return False
    return all(m <= 0 for m in criteria_margins(g, H, d, delta, r, eps_k, gamma1, gamma2, gamma3))


def _certified(inp, d, delta):
    return satisfies_criteria(inp.g, inp.H, d, delta, inp.r, inp.eps_k,
                              inp.gamma1, inp.gamma2, inp.gamma3)


def phi(inp: SubproblemInput, delta: float) -> PhiEval:
    """Sign function whose zeros certify the termination inequalities.

    +1 when ``H + delta I`` is not numerically positive definite or
    ``d(delta) = -(H + delta I)^-1 g`` is longer than ``r``; 0 when
    ``d(delta)`` satisfies (a)-(d) with multiplier ``delta``, or with
    multiplier 0; -1 when ``|d(delta)| < gamma2 r``. The remaining band
    ``gamma2 r <= |d| <= r`` with an uncertified residual only arises from
    ill-conditioning next to the indefinite side, so it reports +1.

    Evaluations are memoized per input; each new ``delta`` costs exactly one
    Cholesky attempt.
    """
    delta = float(delta)
    hit = inp._cache.get(delta)
    if hit is not None:
        return hit
    inp.factorizations += 1
    n = inp.g.shape[0]
    try:
        factor = cho_factor(inp.H + delta * np.eye(n), lower=True, check_finite=False)
    except LinAlgError:
        out = PhiEval(1, delta, None, None, None)
    else:
        d = -cho_solve(factor, inp.g, check_finite=False)
        if not np.all(np.isfinite(d)):
            out = PhiEval(1, delta, None, None, None)
        else:
            nd = float(np.linalg.norm(d))
            if nd > inp.r:
                out = PhiEval(1, delta, d, factor, None)
            elif nd >= inp.gamma2 * inp.r and _certified(inp, d, delta):
                out = PhiEval(0, delta, d, factor, delta)
            elif _certified(inp, d, 0.0):
                out = PhiEval(0, delta, d, factor, 0.0)
            elif nd < inp.gamma2 * inp.r:
                out = PhiEval(-1, delta, d, factor, None)
            else:
                out = PhiEval(1, delta, d, factor, None)
    inp._cache[delta] = out
    return out


def try_newton_step(inp: SubproblemInput) -> Optional[SubproblemSolution]:
    """Newton step ``-H^-1 g`` with ``delta = 0`` if ``H`` factors and the step is
    inside the trust region (and passes the certificate check)."""
    e = phi(inp, 0.0)
    if e.sign == 0:
        return SubproblemSolution(e.d, 0.0, False, inp.factorizations)
    return None


def _scaled(delta, exponent):
    try:
        value = math.ldexp(delta, exponent)
    except OverflowError:
        value = math.inf
    if not math.isfinite(value):
        raise SubproblemError("initial interval search overflowed", 0)
    return value


def find_initial_interval(inp: SubproblemInput):
    """Bracket a sign change of :func:`phi` starting from the warm start.

    Returns ``(lo, hi)``; ``lo == hi`` when a zero was hit directly.
    """
    delta = float(inp.delta_warm)
    if phi(inp, delta).sign == 0:
        return delta, delta
    if delta == 0.0:
        delta = 1.0
    s = phi(inp, delta).sign
    if s == 0:
        return delta, delta
    for i in range(1, MAX_LOOP + 1):
        x = delta if i == 1 else _scaled(delta, s * (i - 1) ** 2)
        y = _scaled(delta, s * i * i)
        px = phi(inp, x).sign
        if px == 0:
            return x, x
        py = phi(inp, y).sign
        if py == 0:
            return y, y
        if px * py < 0:
            return min(x, y), max(x, y)
    raise SubproblemError("no sign change found for the initial interval", 0)


def bisection(inp: SubproblemInput, delta_lo: float, delta_hi: float) -> BisectionResult:
    """Bisect on the sign of :func:`phi` until a zero or the hard-case exit.

    The hard-case exit fires once ``hi - lo <= gamma1 eps / (6 r)`` and the
    shifted model gradient at ``hi`` is at most ``gamma1 eps / 3``.
    """
    if delta_lo == delta_hi:
        e = phi(inp, delta_lo)
        if e.sign != 0:
            raise SubproblemError("degenerate interval is not a zero of phi", 0)
        return BisectionResult(delta_lo, delta_lo, delta_hi, e.d, e.d, False,
                               e.certified_delta, e.factor)
    hi_eval = phi(inp, delta_hi)
    interval_tol = inp.tol / (6.0 * inp.r)
    for _ in range(MAX_LOOP):
        mid = 0.5 * (delta_lo + delta_hi)
        e = phi(inp, mid)
        if e.sign == 0:
            return BisectionResult(delta_lo, mid, delta_hi, e.d, hi_eval.d, False,
                                   e.certified_delta, hi_eval.factor)
        if e.sign > 0:
            delta_lo = mid
        else:
            delta_hi, hi_eval = mid, e
        if delta_hi - delta_lo <= interval_tol:
            res = np.linalg.norm(model_gradient(inp.g, inp.H, hi_eval.d, delta_hi))
            if res <= inp.tol / 3.0:
                return BisectionResult(delta_lo, delta_hi, delta_hi, hi_eval.d, hi_eval.d,
                                       True, None, hi_eval.factor)
    raise SubproblemError("bisection did not converge", 0)


def solve_alpha(d_base, y_unit, r, g=None, H=None):
    """Step length ``alpha`` with ``|d_base + alpha y_unit| = r``.

    Of the two roots, the one with the smaller model value is returned when
    ``g`` and ``H`` are given (ties keep the first root, the larger one in
    magnitude).
    """
    b = float(d_base @ y_unit)
    c = float(d_base @ d_base) - r * r
    disc = b * b - c
    if disc < 0:
        raise SubproblemError("no real step length reaches the trust-region boundary", 0)
    q = -(b + math.copysign(math.sqrt(disc), b))
    roots = (q, c / q) if q != 0 else (0.0, 0.0)
    if g is None or H is None:
        return roots[0]
    values = [model_value(g, H, d_base + a * y_unit) for a in roots]
    return roots[0] if values[0] <= values[1] else roots[1]


def inverse_power_iteration(inp: SubproblemInput, delta_hi, d_hi, factor=None):
    """Push ``d_hi`` to the boundary along an approximate minimum eigenvector.

    ``factor`` is the Cholesky factor of ``H + delta_hi I`` (recomputed, and
    counted, if not supplied).
    """
    n = inp.g.shape[0]
    if factor is None:
        inp.factorizations += 1
        try:
            factor = cho_factor(inp.H + delta_hi * np.eye(n), lower=True, check_finite=False)
        except LinAlgError:
            raise SubproblemError("H + delta I is not positive definite", 0) from None
    rng = np.random.default_rng(inp.rng_seed)
    y = rng.standard_normal(n)
    for _ in range(MAX_LOOP):
        ny = np.linalg.norm(y)
        if not (ny > 0 and math.isfinite(ny)):
            break
        y = cho_solve(factor, y / ny, check_finite=False)
        ny = np.linalg.norm(y)
        if not (ny > 0 and math.isfinite(ny)):
            break
        u = y / ny
        alpha = solve_alpha(d_hi, u, inp.r, inp.g, inp.H)
        d = d_hi + alpha * u
        if _certified(inp, d, delta_hi):
            return d
    raise SubproblemError("inverse power iteration did not certify a direction", 0)


def _pipeline(inp: SubproblemInput) -> SubproblemSolution:
    newton = try_newton_step(inp)
    if newton is not None:
        return newton
    lo, hi = find_initial_interval(inp)
    out = bisection(inp, lo, hi)
    if not out.hard_case:
        return SubproblemSolution(out.d_mid, out.certified_delta, False, inp.factorizations)
    d = inverse_power_iteration(inp, out.delta_hi, out.d_hi, out.factor_hi)
    return SubproblemSolution(d, out.delta_hi, True, inp.factorizations)


def _seed_for(seed, stream):
    if isinstance(seed, (list, tuple)):
        return [*seed, stream]
    return [seed, stream]


def solve_subproblem(inp: SubproblemInput) -> SubproblemSolution:
    """Return ``(d, delta)`` certified against the original gradient.

    On failure the whole pipeline is retried once with the gradient perturbed
    by ``0.5 gamma1 eps u`` for a seeded random unit vector ``u``; the retry
    runs with half the residual budget so the perturbation cannot push the
    residual for the original gradient over ``gamma1 eps``.

    Raises
    ------
    SubproblemError
        With ``factorizations`` set to the total number of Cholesky attempts.
    """
    total = 0
    try:
        sol = _pipeline(inp)
        total = inp.factorizations
        if _certified(inp, sol.d, sol.delta):
            return sol
    except SubproblemError:
        total = inp.factorizations

    n = inp.g.shape[0]
    u = np.random.default_rng(_seed_for(inp.rng_seed, 1)).standard_normal(n)
    u /= np.linalg.norm(u)
    retry = SubproblemInput(
        g=inp.g + 0.5 * inp.gamma1 * inp.eps_k * u, H=inp.H, r=inp.r,
        eps_k=0.5 * inp.eps_k, delta_warm=inp.delta_warm, gamma1=inp.gamma1,
        gamma2=inp.gamma2, gamma3=inp.gamma3, rng_seed=_seed_for(inp.rng_seed, 2),
    )
    try:
        sol = _pipeline(retry)
    except SubproblemError as exc:
        raise SubproblemError(f"subproblem failed after perturbed retry: {exc}",
                              total + retry.factorizations) from None
    total += retry.factorizations
    if not _certified(inp, sol.d, sol.delta):
        raise SubproblemError("perturbed-gradient direction fails the certificate",
                              total)
    return SubproblemSolution(sol.d, sol.delta, sol.hard_case, total)
