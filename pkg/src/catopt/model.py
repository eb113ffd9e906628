"""Quadratic model of the objective and the step acceptance ratios."""

import math

import numpy as np


def model_value(g, H, d):
    """Value of the quadratic model ``1/2 d'Hd + g'd``."""
    return 0.5 * float(d @ (H @ d)) + float(g @ d)


def model_gradient(g, H, d, delta=0.0):
    """Gradient of the shifted model, ``Hd + g + delta d``."""
    return H @ d + g + delta * d


def _ratio(num, den):
    if den != 0:
        return num / den
    if num > 0:
        return math.inf
    if num < 0:
        return -math.inf
    return 0.0


def rho_classic(f0, f_trial, m_val):
    """Actual over predicted reduction.

    A zero predicted reduction maps to +inf/-inf/0 by the sign of the actual
    reduction.
    """
    return _ratio(f0 - f_trial, -m_val)


def rho_hat(f0, f_trial, m_val, min_grad_norm, d_norm, theta):
    """Reduction ratio whose predicted reduction is inflated by
    ``theta/2 * min_grad_norm * d_norm``.

    Parameters
    ----------
    min_grad_norm : float
        ``min(|grad f(x)|, |grad f(x + d)|)``, or ``|grad f(x)|`` alone when
        the trial gradient was not evaluated.
    """
    return _ratio(f0 - f_trial, -m_val + 0.5 * theta * min_grad_norm * d_norm)
