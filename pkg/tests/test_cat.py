import math

import numpy as np
import pytest

from catopt.cat import (compute_b_k, epsilon_update, initial_radius, radius_update, solve,
                        spectral_norm, step_decision)
from catopt.core import ObjectiveOracle, SolverConfig, Status, wrap_counting
from catopt.problems import make_problem

CFG = SolverConfig()


class TestInitialRadius:
    def test_heuristic(self):
        assert initial_radius(np.array([2.0, 0.0]), np.eye(2), CFG) == pytest.approx(20.0, rel=1e-12)

    def test_zero_hessian(self):
        assert initial_radius(np.array([2.0, 0.0]), np.zeros((2, 2)), CFG) == 1.0

    def test_override(self):
        assert initial_radius(np.array([2.0, 0.0]), np.eye(2), CFG.replace(r1_override=0.5)) == 0.5

    def test_fixed(self):
        assert initial_radius(np.array([2.0, 0.0]), np.eye(2), CFG.replace(fixed_initial_radius=True)) == 1.0

    def test_spectral_norm_matches_eigenvalues(self):
        rng = np.random.default_rng(0)
        A = rng.standard_normal((6, 6))
        H = A + A.T
        assert spectral_norm(H, max_iter=5000, rtol=1e-14) == pytest.approx(
            np.max(np.abs(np.linalg.eigvalsh(H))), rel=1e-6)


def test_b_k():
    assert compute_b_k(1.0, 2.0, 10.0) == pytest.approx(0.20000011, rel=1e-15)
    assert compute_b_k(0.0, 0.0, 0.0) == 1e-8
    assert compute_b_k(1.0, 1.0, -1.0) == pytest.approx(0.1 + 2e-8, rel=1e-15)


class TestRadiusUpdate:
    def test_unsuccessful(self):
        assert radius_update(8.0, 0.3, 0.05, CFG) == 1.0

    def test_successful_grows(self):
        assert radius_update(1.0, 0.1, 0.5, CFG) == pytest.approx(1.6)

    def test_successful_never_shrinks(self):
        assert radius_update(10.0, 0.1, 0.5, CFG) == 10.0

    def test_conference_rule(self):
        cfg = CFG.replace(conference_radius_rule=True)
        assert radius_update(10.0, 0.5, 0.5, cfg) == 4.0
        assert radius_update(10.0, 0.5, 0.05, cfg) == 0.0625


class TestEpsilonUpdate:
    def test_qualifying(self):
        assert epsilon_update(1.0, 0.0, -1.0, 0.1, 0.4) == 0.4

    def test_not_qualifying(self):
        assert epsilon_update(1.0, 0.0, 0.5, 0.1) == 1.0

    def test_min_kept(self):
        assert epsilon_update(0.3, 0.0, 0.0, 0.1, 0.5) == 0.3

    def test_missing_gradient(self):
        with pytest.raises(ValueError):
            epsilon_update(1.0, 0.0, 0.0, 0.1)


class TestStepDecision:
    def test_any_decrease_accepted(self):
        assert step_decision(1.0, 0.9, 0.05, CFG)

    def test_increase_rejected(self):
        assert not step_decision(1.0, 1.1, 5.0, CFG)

    def test_sigma_filter(self):
        assert not step_decision(1.0, 0.9, 0.01, CFG.replace(sigma=0.05))


class TestSolve:
    def test_sphere_one_newton_step(self):
        oracle, spec = make_problem("sphere", 2)
        res = solve(oracle, spec.x1)
        assert res.status is Status.OPTIMAL
        assert res.iterations == 1
        assert res.counters.n_hess == 1 and res.counters.n_fact == 1
        assert res.grad_norm_final == 0.0

    def test_already_optimal(self):
        oracle, _ = make_problem("sphere", 3)
        res = solve(oracle, np.zeros(3))
        assert res.status is Status.OPTIMAL and res.iterations == 0
        assert res.counters.n_hess == 0

    def test_rosenbrock_pinned(self):
        oracle, spec = make_problem("rosenbrock", 2)
        res = solve(oracle, spec.x1)
        assert res.status is Status.OPTIMAL
        assert res.grad_norm_final <= 1e-5
        np.testing.assert_allclose(res.x_final, [1.0, 1.0], atol=1e-4)
        # pinned from the first validated run
        assert res.iterations == 34
        assert (res.counters.n_f, res.counters.n_grad, res.counters.n_hess) == (35, 24, 23)

    def test_deterministic(self):
        oracle, spec = make_problem("hard_case_synthetic", 10)
        a = solve(oracle, spec.x1, trace=True)
        b = solve(oracle, spec.x1, trace=True)
        assert a.counters == b.counters and np.array_equal(a.x_final, b.x_final)
        assert [t.d_norm for t in a.trace] == [t.d_norm for t in b.trace]

    def test_hard_case_first_step(self):
        oracle, spec = make_problem("hard_case_synthetic", 3)
        res = solve(oracle, spec.x1, trace=True)
        assert res.trace[0].hard_case
        assert res.status is Status.OPTIMAL
        assert res.f_final == pytest.approx(spec.known_opt[1], abs=1e-9)

    def test_max_iterations(self):
        oracle, spec = make_problem("rosenbrock", 2)
        res = solve(oracle, spec.x1, SolverConfig(max_iter=3))
        assert res.status is Status.MAX_ITERATIONS and res.iterations == 3

    def test_max_time(self):
        oracle, spec = make_problem("rosenbrock", 2)
        slow = ObjectiveOracle(2, oracle.eval_f, oracle.eval_grad,
                               lambda x: (__import__("time").sleep(0.02), oracle.eval_hess(x))[1])
        res = solve(slow, spec.x1, SolverConfig(max_time=0.01))
        assert res.status is Status.MAX_TIME

    def test_step_size_limit(self):
        oracle, spec = make_problem("sphere", 2)
        res = solve(oracle, [1e-12, 0.0], SolverConfig(eps_tol=1e-20, step_size_limit=1e-6))
        assert res.status is Status.STEP_SIZE_LIMIT

    def test_nan_hessian_is_numerical_failure(self):
        o = ObjectiveOracle(1, lambda x: float(x[0] ** 2), lambda x: 2 * x,
                            lambda x: np.array([[math.nan]]))
        assert solve(o, [1.0]).status is Status.SUBPROBLEM_ERROR

    def test_counting_oracle_reused(self):
        oracle, spec = make_problem("rosenbrock", 2)
        co = wrap_counting(oracle)
        res = solve(co, spec.x1)
        assert res.counters == co.counters()

    def test_best_point_is_reported(self):
        oracle, spec = make_problem("powell_singular", 4)
        res = solve(oracle, spec.x1, trace=True)
        assert np.linalg.norm(oracle.eval_grad(res.x_final)) == res.grad_norm_final
        assert oracle.eval_f(res.x_final) == res.f_final

    @pytest.mark.parametrize("flag", ["use_classic_rho", "conference_radius_rule", "fixed_initial_radius"])
    def test_ablations_still_solve(self, flag):
        oracle, spec = make_problem("rosenbrock", 2)
        res = solve(oracle, spec.x1, SolverConfig().replace(**{flag: True}))
        assert res.status is Status.OPTIMAL

    def test_bad_dimension(self):
        oracle, _ = make_problem("sphere", 2)
        with pytest.raises(ValueError):
            solve(oracle, [1.0, 2.0, 3.0])
