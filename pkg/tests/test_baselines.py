import numpy as np
import pytest

from catopt.baselines import ArmijoConfig, armijo_step, gd_solve
from catopt.cat import solve
from catopt.core import ObjectiveOracle, Status, wrap_counting
from catopt.problems import make_problem


def half_square():
    return wrap_counting(ObjectiveOracle(1, lambda x: 0.5 * float(x[0] ** 2), lambda x: x,
                                         lambda x: np.eye(1)))


def brute_force_i(f, x, g, eta_prev, c, mu, max_i=10):
    for i in range(max_i + 1):
        eta = eta_prev * mu ** i
        if f(x - eta * g) <= f(x) - c * eta * float(g @ g):
            return i
    return None


class TestArmijoStep:
    def test_unit_step_accepted(self):
        o = half_square()
        step = armijo_step(o, np.array([1.0]), 0.5, np.array([1.0]), 1.0, 0.5, 0.5)
        assert step.backtracks == 0 and step.eta == 1.0
        assert step.x_next[0] == 0.0 and step.f_next == 0.0

    def test_backtracking_matches_brute_force(self):
        o = half_square()
        x = g = np.array([1.0])
        expected = brute_force_i(o.inner.eval_f, x, g, 4.0, 0.5, 0.5)
        assert expected == 2
        step = armijo_step(o, x, 0.5, g, 4.0, 0.5, 0.5)
        assert step.backtracks == expected and step.eta == 1.0
        assert o.n_f == expected + 1

    def test_tiny_gradient_no_backtrack(self):
        oracle, _ = make_problem("rosenbrock", 2)
        x = np.array([1.0 + 1e-9, 1.0])
        g = oracle.eval_grad(x)
        step = armijo_step(oracle, x, oracle.eval_f(x), g, 1e-4, 1e-4, 0.5)
        assert step.backtracks == 0


class TestGD:
    def test_strict_decrease_on_quadratic(self):
        oracle, spec = make_problem("convex_quadratic", 10)
        res = gd_solve(oracle, spec.x1, trace=True)
        assert res.status is Status.OPTIMAL
        etas = [t["eta"] for t in res.trace]
        assert all(b <= a for a, b in zip(etas, etas[1:]))
        for t in res.trace:
            assert t["f"] - t["f_next"] >= 1e-4 * t["eta"] * t["grad_norm"] ** 2

    def test_immediately_optimal(self):
        oracle, _ = make_problem("sphere", 2)
        res = gd_solve(oracle, np.zeros(2))
        assert res.iterations == 0 and res.status is Status.OPTIMAL

    def test_counter_accounting(self):
        oracle, spec = make_problem("rosenbrock", 2)
        res = gd_solve(oracle, spec.x1, ArmijoConfig(max_iter=200), trace=True)
        assert res.counters.n_grad == res.iterations + 1
        assert res.counters.n_f == 1 + sum(t["backtracks"] + 1 for t in res.trace)
        assert res.counters.n_hess == 0

    def test_rosenbrock_pinned_and_worse_than_cat(self):
        oracle, spec = make_problem("rosenbrock", 2)
        res = gd_solve(oracle, spec.x1)
        assert res.status is Status.OPTIMAL
        # pinned from the first validated run
        assert (res.iterations, res.counters.n_f, res.counters.n_grad) == (26944, 26955, 26945)
        assert res.counters.n_grad > solve(oracle, spec.x1).counters.n_grad

    def test_config_validation(self):
        with pytest.raises(ValueError):
            ArmijoConfig(c=1.0)
        with pytest.raises(ValueError):
            ArmijoConfig(mu=0.0)
