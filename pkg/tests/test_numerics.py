"""Dense linear-algebra and integrator kernels.

numpy.linalg is used here only as an independent oracle for the hand-rolled
eigensolver and factorizations; the library code never calls it.
"""

import math

import numpy as np
import pytest

from cosafe.errors import ConvergenceFailure, NonFiniteDerivative, NotPositiveDefinite
from cosafe.numerics import (finite_diff_gradient, is_positive_definite,
                             rk4_step, spd_cholesky, spd_inverse, sym_eig,
                             symmetrize)

# Frozen oracle: one RK4 step on y' = -y equals the degree-4 Taylor polynomial
# of exp(-dt), here computed by hand for dt = 0.1.
RK4_EXP_STEP = 1.0 - 0.1 + 0.1**2 / 2 - 0.1**3 / 6 + 0.1**4 / 24  # 0.9048375


class TestRk4Step:
    def test_zero_rhs_fixed_point(self):
        y = np.array([1.7, -2.3])
        out = rk4_step(lambda t, y: np.zeros_like(y), 0.0, y, 0.1)
        np.testing.assert_array_equal(out, y)

    def test_exponential_one_step(self):
        out = rk4_step(lambda t, y: -y, 0.0, np.array([1.0]), 0.1)
        assert out[0] == pytest.approx(RK4_EXP_STEP, abs=1e-15)
        assert abs(out[0] - math.exp(-0.1)) < 1e-7

    def test_polynomial_quadrature_exact(self):
        # RK4 integrates polynomials of degree <= 4 exactly; y' = t gives 1/2.
        out = rk4_step(lambda t, y: np.array([t]), 0.0, np.array([0.0]), 1.0)
        assert out[0] == pytest.approx(0.5, abs=1e-15)

    def test_global_fourth_order_accuracy(self):
        y = np.array([1.0])
        for k in range(100):
            y = rk4_step(lambda t, y: -y, k * 0.01, y, 0.01)
        assert abs(y[0] - math.exp(-1.0)) < 1e-9

    def test_convergence_order_is_four(self):
        def integrate(dt):
            y = np.array([1.0])
            steps = round(1.0 / dt)
            for k in range(steps):
                y = rk4_step(lambda t, y: -y, k * dt, y, dt)
            return abs(y[0] - math.exp(-1.0))

        ratio = integrate(0.02) / integrate(0.01)
        assert 12.0 < ratio < 20.0

    def test_nonfinite_stage_raises(self):
        with pytest.raises(NonFiniteDerivative):
            rk4_step(lambda t, y: y * np.nan, 0.0, np.array([1.0]), 0.1)

    def test_nonfinite_later_stage_raises(self):
        # First stage is evaluated at the base point; blow up only off-base.
        def rhs(t, y):
            if t > 0.0:
                return np.array([np.inf])
            return np.array([1.0])

        with pytest.raises(NonFiniteDerivative):
            rk4_step(rhs, 0.0, np.array([0.0]), 0.1)


class TestSymEig:
    def test_diagonal_matrix(self):
        dec = sym_eig(np.diag([5.0, 2.0]))
        np.testing.assert_allclose(dec.eigenvalues, [2.0, 5.0], atol=1e-14)
        # Ascending order pairs the first column with eigenvalue 2 (basis e2).
        np.testing.assert_allclose(np.abs(dec.eigenvectors),
                                   [[0.0, 1.0], [1.0, 0.0]], atol=1e-14)

    def test_two_by_two_hand_solution(self):
        dec = sym_eig(np.array([[2.0, 1.0], [1.0, 2.0]]))
        np.testing.assert_allclose(dec.eigenvalues, [1.0, 3.0], atol=1e-12)

    def test_identity(self):
        dec = sym_eig(np.eye(3))
        np.testing.assert_allclose(dec.eigenvalues, [1.0, 1.0, 1.0], atol=1e-14)
        np.testing.assert_allclose(dec.eigenvectors @ dec.eigenvectors.T,
                                   np.eye(3), atol=1e-12)

    @pytest.mark.parametrize("n", [2, 3, 4, 6, 8])
    def test_matches_numpy_oracle(self, n):
        rng = np.random.default_rng(n)
        for _ in range(20):
            s = symmetrize(rng.uniform(-10.0, 10.0, size=(n, n)))
            dec = sym_eig(s)
            np.testing.assert_allclose(dec.eigenvalues, np.linalg.eigvalsh(s),
                                       atol=1e-9)

    def test_reconstruction_and_orthonormality_property(self):
        rng = np.random.default_rng(42)
        for _ in range(1000):
            n = int(rng.integers(2, 7))
            s = symmetrize(rng.uniform(-10.0, 10.0, size=(n, n)))
            dec = sym_eig(s)
            recon = dec.eigenvectors @ np.diag(dec.eigenvalues) @ dec.eigenvectors.T
            scale = max(1.0, np.linalg.norm(s))
            assert np.linalg.norm(recon - s) <= 1e-10 * scale
            assert np.linalg.norm(dec.eigenvectors.T @ dec.eigenvectors
                                  - np.eye(n)) <= 1e-10

    def test_eigenvalues_sorted_ascending(self):
        rng = np.random.default_rng(7)
        s = symmetrize(rng.uniform(-10.0, 10.0, size=(5, 5)))
        vals = sym_eig(s).eigenvalues
        assert np.all(np.diff(vals) >= 0.0)

    def test_sweep_budget_exhaustion_raises(self):
        with pytest.raises(ConvergenceFailure):
            sym_eig(np.array([[2.0, 1.0], [1.0, 2.0]]), max_sweeps=0)


class TestCholeskyInverse:
    def test_cholesky_hand_example(self):
        L = spd_cholesky(np.array([[4.0, 2.0], [2.0, 3.0]]))
        np.testing.assert_allclose(
            L, [[2.0, 0.0], [1.0, math.sqrt(2.0)]], atol=1e-14)

    def test_cholesky_rejects_indefinite(self):
        with pytest.raises(NotPositiveDefinite):
            spd_cholesky(np.array([[1.0, 2.0], [2.0, 1.0]]))

    def test_cholesky_rejects_semidefinite(self):
        with pytest.raises(NotPositiveDefinite):
            spd_cholesky(np.array([[1.0, 1.0], [1.0, 1.0]]))

    def test_is_positive_definite(self):
        assert is_positive_definite(np.eye(2))
        assert not is_positive_definite(np.array([[1.0, 2.0], [2.0, 1.0]]))

    def test_inverse_diagonal(self):
        np.testing.assert_allclose(spd_inverse(np.diag([2.0, 4.0])),
                                   np.diag([0.5, 0.25]), atol=1e-14)

    def test_inverse_identity(self):
        np.testing.assert_allclose(spd_inverse(np.eye(4)), np.eye(4),
                                   atol=1e-14)

    def test_inverse_hand_example(self):
        inv = spd_inverse(np.array([[2.0, 1.0], [1.0, 2.0]]))
        np.testing.assert_allclose(
            inv, np.array([[2.0, -1.0], [-1.0, 2.0]]) / 3.0, atol=1e-12)

    def test_inverse_residual_bound(self):
        rng = np.random.default_rng(3)
        for _ in range(50):
            n = int(rng.integers(2, 7))
            a = rng.normal(size=(n, n))
            p = symmetrize(a @ a.T + n * np.eye(n))
            s = spd_inverse(p)
            assert np.linalg.norm(p @ s - np.eye(n)) <= 1e-9 * n
            np.testing.assert_array_equal(s, s.T)

    def test_inverse_involution_property(self):
        # Random SPD with condition number capped at 1e6.
        rng = np.random.default_rng(11)
        for _ in range(100):
            n = int(rng.integers(2, 6))
            q = np.linalg.qr(rng.normal(size=(n, n)))[0]
            vals = np.exp(rng.uniform(0.0, math.log(1e6), size=n))
            p = symmetrize(q @ np.diag(vals) @ q.T)
            back = spd_inverse(spd_inverse(p))
            assert np.linalg.norm(back - p) <= 1e-8 * max(1.0, np.linalg.norm(p))

    def test_inverse_rejects_indefinite(self):
        with pytest.raises(NotPositiveDefinite):
            spd_inverse(np.array([[1.0, 2.0], [2.0, 1.0]]))


class TestFiniteDiffGradient:
    def test_quadratic(self):
        grad = finite_diff_gradient(lambda x: float(x @ x),
                                    np.array([1.0, 2.0]), 1e-5)
        np.testing.assert_allclose(grad, [2.0, 4.0], atol=1e-8)

    def test_constant(self):
        grad = finite_diff_gradient(lambda x: 3.0, np.array([1.0, -1.0]), 1e-5)
        np.testing.assert_array_equal(grad, [0.0, 0.0])

    def test_linear_coordinate(self):
        grad = finite_diff_gradient(lambda x: float(x[0]),
                                    np.array([4.0, 5.0, 6.0]), 1e-6)
        np.testing.assert_allclose(grad, [1.0, 0.0, 0.0], atol=1e-9)


class TestSymmetrize:
    def test_enforces_exact_symmetry(self):
        a = np.array([[1.0, 2.0], [4.0, 3.0]])
        s = symmetrize(a)
        np.testing.assert_array_equal(s, s.T)
        np.testing.assert_allclose(s, [[1.0, 3.0], [3.0, 3.0]], atol=1e-15)
