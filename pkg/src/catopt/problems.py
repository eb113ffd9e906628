"""Analytic test problems, derivative checking, and quadratic problem files."""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from .core import ObjectiveOracle


@dataclass
class ProblemSpec:
    name: str
    dim: int
    x1: np.ndarray
    known_opt: Optional[tuple] = None  # (x*, f*)


class QuadraticOracle(ObjectiveOracle):
    """``f(x) = 1/2 x'Ax + b'x + c`` with ``A`` symmetrized."""

    def __init__(self, A, b, c=0.0, x1=None):
        A = np.asarray(A, dtype=float)
        self.A = 0.5 * (A + A.T)
        self.b = np.asarray(b, dtype=float)
        self.c = float(c)
        self.x1 = None if x1 is None else np.asarray(x1, dtype=float)
        super().__init__(self.b.shape[0], self._value, self._gradient, self._hessian)

    def _value(self, x):
        return 0.5 * x @ (self.A @ x) + self.b @ x + self.c

    def _gradient(self, x):
        return self.A @ x + self.b

    def _hessian(self, x):
        return self.A


def _sphere(dim):
    x1 = np.zeros(dim)
    x1[:2] = [3.0, 4.0][:dim]
    oracle = QuadraticOracle(np.eye(dim), np.zeros(dim))
    return oracle, ProblemSpec("sphere", dim, x1, (np.zeros(dim), 0.0))


def _convex_quadratic(dim, kappa=100.0):
    evals = np.logspace(0.0, math.log10(kappa), dim) if dim > 1 else np.ones(1)
    oracle = QuadraticOracle(np.diag(evals), np.zeros(dim))
    return oracle, ProblemSpec("convex_quadratic", dim, np.ones(dim), (np.zeros(dim), 0.0))


def _chained_rosenbrock(dim):
    def f(x):
        return float(np.sum(100.0 * (x[1:] - x[:-1] ** 2) ** 2 + (1.0 - x[:-1]) ** 2))

    def grad(x):
        g = np.zeros_like(x)
        t = x[1:] - x[:-1] ** 2
        g[:-1] = -400.0 * x[:-1] * t - 2.0 * (1.0 - x[:-1])
        g[1:] += 200.0 * t
        return g

    def hess(x):
        n = x.shape[0]
        H = np.zeros((n, n))
        i = np.arange(n - 1)
        H[i, i] = 1200.0 * x[:-1] ** 2 - 400.0 * x[1:] + 2.0
        H[i + 1, i + 1] += 200.0
        H[i, i + 1] = H[i + 1, i] = -400.0 * x[:-1]
        return H

    x1 = np.tile([-1.2, 1.0], dim)[:dim]
    return ObjectiveOracle(dim, f, grad, hess), ProblemSpec("rosenbrock", dim, x1, (np.ones(dim), 0.0))


def _extended_rosenbrock(dim):
    if dim % 2:
        raise ValueError("extended_rosenbrock needs an even dimension")

    def f(x):
        u, v = x[0::2], x[1::2]
        return float(np.sum(100.0 * (v - u ** 2) ** 2 + (1.0 - u) ** 2))

    def grad(x):
        u, v = x[0::2], x[1::2]
        g = np.empty_like(x)
        g[0::2] = -400.0 * u * (v - u ** 2) - 2.0 * (1.0 - u)
        g[1::2] = 200.0 * (v - u ** 2)
        return g

    def hess(x):
        u, v = x[0::2], x[1::2]
        H = np.zeros((dim, dim))
        i = np.arange(0, dim, 2)
        H[i, i] = 1200.0 * u ** 2 - 400.0 * v + 2.0
        H[i + 1, i + 1] = 200.0
        H[i, i + 1] = H[i + 1, i] = -400.0 * u
        return H

    x1 = np.tile([-1.2, 1.0], dim // 2)
    spec = ProblemSpec("extended_rosenbrock", dim, x1, (np.ones(dim), 0.0))
    return ObjectiveOracle(dim, f, grad, hess), spec


def _powell_singular(dim):
    if dim % 4:
        raise ValueError("powell_singular needs a dimension divisible by 4")

    def parts(x):
        return x[0::4], x[1::4], x[2::4], x[3::4]

    def f(x):
        a, b, c, d = parts(x)
        return float(np.sum((a + 10 * b) ** 2 + 5 * (c - d) ** 2 + (b - 2 * c) ** 4
                            + 10 * (a - d) ** 4))

    def grad(x):
        a, b, c, d = parts(x)
        t1, t2, t3, t4 = a + 10 * b, c - d, b - 2 * c, a - d
        g = np.empty_like(x)
        g[0::4] = 2 * t1 + 40 * t4 ** 3
        g[1::4] = 20 * t1 + 4 * t3 ** 3
        g[2::4] = 10 * t2 - 8 * t3 ** 3
        g[3::4] = -10 * t2 - 40 * t4 ** 3
        return g

    def hess(x):
        a, b, c, d = parts(x)
        s3 = 12 * (b - 2 * c) ** 2
        s4 = 120 * (a - d) ** 2
        H = np.zeros((dim, dim))
        for blk in range(dim // 4):
            j = 4 * blk
            h = np.array([
                [2 + s4[blk], 20, 0, -s4[blk]],
                [20, 200 + s3[blk], -2 * s3[blk], 0],
                [0, -2 * s3[blk], 10 + 4 * s3[blk], -10],
                [-s4[blk], 0, -10, 10 + s4[blk]],
            ])
            H[j:j + 4, j:j + 4] = h
        return H

    x1 = np.tile([3.0, -1.0, 0.0, 1.0], dim // 4)
    spec = ProblemSpec("powell_singular", dim, x1, (np.zeros(dim), 0.0))
    return ObjectiveOracle(dim, f, grad, hess), spec


def _indefinite_quadratic(dim):
    # unbounded below; meant for subproblem tests, not minimization runs
    evals = np.ones(dim)
    evals[1::2] = -2.0
    oracle = QuadraticOracle(np.diag(evals), np.ones(dim))
    return oracle, ProblemSpec("indefinite_quadratic", dim, np.zeros(dim))


def _hard_case_synthetic(dim):
    """Double well along the first axis plus a tilted quadratic in the rest.

    At ``x1 = 0`` the Hessian is ``diag(-1, 1, ..., 1)`` and the gradient has
    no component along ``e_1``, its minimum eigenvector.
    """
    if dim < 2:
        raise ValueError("hard_case_synthetic needs dim >= 2")
    c = np.full(dim - 1, 1.0 / math.sqrt(dim - 1))

    def f(x):
        s, rest = x[0], x[1:]
        return float(0.25 * s ** 4 - 0.5 * s ** 2 + 0.5 * rest @ rest + c @ rest)

    def grad(x):
        g = np.empty_like(x)
        g[0] = x[0] ** 3 - x[0]
        g[1:] = x[1:] + c
        return g

    def hess(x):
        H = np.eye(dim)
        H[0, 0] = 3.0 * x[0] ** 2 - 1.0
        return H

    x_star = np.concatenate([[1.0], -c])
    spec = ProblemSpec("hard_case_synthetic", dim, np.zeros(dim), (x_star, -0.25 - 0.5 * c @ c))
    return ObjectiveOracle(dim, f, grad, hess), spec


CATALOG = {
    "sphere": (_sphere, 2),
    "convex_quadratic": (_convex_quadratic, 10),
    "rosenbrock": (_chained_rosenbrock, 2),
    "extended_rosenbrock": (_extended_rosenbrock, 4),
    "powell_singular": (_powell_singular, 4),
    "indefinite_quadratic": (_indefinite_quadratic, 2),
    "hard_case_synthetic": (_hard_case_synthetic, 3),
}


def make_problem(name, dim=None, **params):
    """Build a catalog problem.

    ``convex_quadratic`` accepts ``kappa`` (condition number, default 100).

    Raises
    ------
    KeyError
        Unknown problem name.
    ValueError
        Dimension not valid for the problem family.
    """
    try:
        builder, default_dim = CATALOG[name]
    except KeyError:
        raise KeyError(f"unknown problem {name!r}; known: {', '.join(CATALOG)}") from None
    dim = default_dim if dim is None else int(dim)
    if dim < 1 or (name == "rosenbrock" and dim < 2):
        raise ValueError(f"invalid dimension {dim} for {name}")
    return builder(dim, **params)


def finite_diff_check(oracle, x, h=1e-5):
    """Max relative errors of the analytic gradient and Hessian against
    central differences (of ``f`` and of the analytic gradient respectively).

    Errors are measured as ``|approx - exact| / max(1, |exact|)`` entrywise.
    """
    x = np.asarray(x, dtype=float)
    n = x.shape[0]
    g = oracle.eval_grad(x)
    H = oracle.eval_hess(x)
    g_fd = np.empty(n)
    H_fd = np.empty((n, n))
    for i in range(n):
        e = np.zeros(n)
        e[i] = h
        g_fd[i] = (oracle.eval_f(x + e) - oracle.eval_f(x - e)) / (2 * h)
        H_fd[:, i] = (oracle.eval_grad(x + e) - oracle.eval_grad(x - e)) / (2 * h)
    H_fd = 0.5 * (H_fd + H_fd.T)
    err_g = np.max(np.abs(g_fd - g) / np.maximum(1.0, np.abs(g)))
    err_h = np.max(np.abs(H_fd - H) / np.maximum(1.0, np.abs(H)))
    return float(err_g), float(err_h)


class QuadraticFormatError(ValueError):
    pass


def load_quadratic(path) -> QuadraticOracle:
    """Read a quadratic problem file.

    Format (``#`` starts a comment, blank lines ignored)::

        dim n
        <n rows of n numbers>     # A
        <n numbers>               # b
        <one number>              # c
        <n numbers>               # optional starting point
    """
    rows = []
    for lineno, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        text = raw.split("#", 1)[0].strip()
        if text:
            rows.append((lineno, text.split()))
    if not rows:
        raise QuadraticFormatError("empty file: missing 'dim' header")

    lineno, head = rows[0]
    if len(head) != 2 or head[0] != "dim":
        raise QuadraticFormatError(f"line {lineno}: header must be 'dim <n>', got {' '.join(head)!r}")
    try:
        n = int(head[1])
    except ValueError:
        raise QuadraticFormatError(f"line {lineno}: field 'dim' is not an integer: {head[1]!r}") from None
    if n < 1:
        raise QuadraticFormatError(f"line {lineno}: field 'dim' must be positive")

    def numbers(index, what, count):
        if index >= len(rows):
            raise QuadraticFormatError(f"missing {what} (expected {count} numbers)")
        ln, toks = rows[index]
        if len(toks) != count:
            raise QuadraticFormatError(
                f"line {ln}: dimension mismatch in {what}: expected {count} numbers, got {len(toks)}")
        try:
            return [float(t) for t in toks]
        except ValueError as exc:
            raise QuadraticFormatError(f"line {ln}: bad number in {what}: {exc}") from None

    A = [numbers(1 + i, f"row {i + 1} of A", n) for i in range(n)]
    b = numbers(1 + n, "b", n)
    c = numbers(2 + n, "c", 1)[0]
    x1 = numbers(3 + n, "x1", n) if len(rows) > 3 + n else None
    if len(rows) > 4 + n:
        raise QuadraticFormatError(f"line {rows[4 + n][0]}: unexpected trailing data")
    return QuadraticOracle(np.array(A), np.array(b), c, x1)
