import numpy as np
import pytest

from catopt.problems import (CATALOG, QuadraticFormatError, finite_diff_check, load_quadratic,
                             make_problem)
from catopt.core import ObjectiveOracle
from catopt.trs import SubproblemInput, try_newton_step


def test_sphere_values():
    o, spec = make_problem("sphere", 2)
    np.testing.assert_array_equal(spec.x1, [3.0, 4.0])
    assert o.eval_f(spec.x1) == 12.5
    np.testing.assert_array_equal(o.eval_grad(spec.x1), [3.0, 4.0])
    np.testing.assert_array_equal(o.eval_hess(spec.x1), np.eye(2))


def test_rosenbrock_start_value():
    o, spec = make_problem("rosenbrock", 2)
    assert o.eval_f(spec.x1) == pytest.approx(24.2, rel=1e-14)


def test_indefinite_quadratic_blocks_newton():
    o, spec = make_problem("indefinite_quadratic", 2)
    np.testing.assert_array_equal(o.eval_hess(spec.x1), np.diag([1.0, -2.0]))
    inp = SubproblemInput(g=o.eval_grad(spec.x1), H=o.eval_hess(spec.x1), r=1.0, eps_k=1.0)
    assert try_newton_step(inp) is None


@pytest.mark.parametrize("dim", [2, 3, 10])
def test_hard_case_gradient_orthogonal_to_min_eigenvector(dim):
    o, spec = make_problem("hard_case_synthetic", dim)
    g = o.eval_grad(spec.x1)
    v_min = np.zeros(dim)
    v_min[0] = 1.0
    assert np.linalg.eigvalsh(o.eval_hess(spec.x1))[0] == -1.0
    assert abs(g @ v_min) / np.linalg.norm(g) <= 1e-12


@pytest.mark.parametrize("name", [n for n in CATALOG])
def test_known_optimum_is_stationary(name):
    o, spec = make_problem(name)
    if spec.known_opt is None:
        pytest.skip("no known optimum")
    x_star, f_star = spec.known_opt
    assert np.linalg.norm(o.eval_grad(x_star)) <= 1e-8
    assert o.eval_f(x_star) == pytest.approx(f_star, abs=1e-12)


def test_unknown_and_bad_dims():
    with pytest.raises(KeyError):
        make_problem("nope")
    with pytest.raises(ValueError):
        make_problem("powell_singular", 6)
    with pytest.raises(ValueError):
        make_problem("extended_rosenbrock", 3)


class TestFiniteDiff:
    def test_sphere(self):
        o, _ = make_problem("sphere", 4)
        eg, eh = finite_diff_check(o, np.array([0.3, -1.0, 2.0, 5.0]), 1e-5)
        assert eg <= 1e-6 and eh <= 1e-6

    def test_rosenbrock(self):
        o, spec = make_problem("rosenbrock", 2)
        assert finite_diff_check(o, spec.x1, 1e-5)[0] <= 1e-5

    def test_zero_function(self):
        o = ObjectiveOracle(3, lambda x: 0.0, lambda x: np.zeros(3), lambda x: np.zeros((3, 3)))
        assert finite_diff_check(o, np.ones(3), 1e-5) == (0.0, 0.0)

    def test_detects_wrong_gradient(self):
        o = ObjectiveOracle(2, lambda x: float(x @ x), lambda x: x, lambda x: 2 * np.eye(2))
        assert finite_diff_check(o, np.ones(2), 1e-5)[0] > 0.1


class TestLoadQuadratic:
    def write(self, tmp_path, text):
        p = tmp_path / "q.txt"
        p.write_text(text, encoding="utf-8")
        return p

    def test_identity(self, tmp_path):
        o = load_quadratic(self.write(tmp_path, "dim 2\n1 0\n0 1\n0 0\n0\n"))
        assert o.eval_f(np.ones(2)) == 1.0
        assert o.x1 is None

    def test_matches_indefinite_builtin(self, tmp_path):
        text = "# indefinite\ndim 2\n1 0  # row 1\n0 -2\n1 1\n0\n0 0\n"
        o = load_quadratic(self.write(tmp_path, text))
        ref, _ = make_problem("indefinite_quadratic", 2)
        x = np.array([0.7, -1.3])
        assert o.eval_f(x) == ref.eval_f(x)
        np.testing.assert_array_equal(o.eval_grad(x), ref.eval_grad(x))
        np.testing.assert_array_equal(o.x1, [0.0, 0.0])

    def test_symmetrized(self, tmp_path):
        o = load_quadratic(self.write(tmp_path, "dim 2\n1 2\n0 1\n0 0\n0\n"))
        np.testing.assert_array_equal(o.A, [[1.0, 1.0], [1.0, 1.0]])

    @pytest.mark.parametrize("text, fragment", [
        ("dims 2\n", "header"),
        ("dim two\n", "'dim'"),
        ("dim 2\n1 0\n0\n0 0\n0\n", "line 3"),
        ("dim 2\n1 0\n0 1\n0 x\n0\n", "bad number in b"),
        ("dim 2\n1 0\n0 1\n0 0\n", "missing c"),
        ("", "empty"),
    ])
    def test_errors(self, tmp_path, text, fragment):
        with pytest.raises(QuadraticFormatError, match=fragment):
            load_quadratic(self.write(tmp_path, text))
