"""Plant models, analytic derivatives, and the goal-seeking unicycle law."""

import math

import numpy as np
import pytest

from cosafe.numerics import finite_diff_gradient
from cosafe.safety import second_order_clf
from cosafe.systems import (AdmissibleSets, UnicycleGains, dynamics_jacobian,
                            second_order_system, unicycle_nominal,
                            unicycle_system, wrap_to_pi)


class TestSecondOrderModel:
    def setup_method(self):
        self.model = second_order_system()

    def test_dimensions(self):
        assert (self.model.n_x, self.model.n_u, self.model.n_z) == (2, 1, 1)

    def test_drift_hand_value(self):
        np.testing.assert_allclose(self.model.drift(np.array([1.0, 1.0])),
                                   [-1.25, 0.5], atol=1e-15)

    def test_origin_equilibrium(self):
        np.testing.assert_array_equal(self.model.drift(np.zeros(2)), [0.0, 0.0])
        np.testing.assert_array_equal(self.model.output(np.zeros(2)), [0.0])

    def test_actuation_at_origin(self):
        np.testing.assert_array_equal(self.model.actuation(np.zeros(2)),
                                      [[0.0], [1.0]])

    def test_drift_jacobian_form(self):
        x = np.array([2.0, -1.0])
        np.testing.assert_allclose(self.model.drift_jacobian(x),
                                   [[-0.25, -1.0], [12.0, -0.5]], atol=1e-15)

    def test_actuation_jacobian_form(self):
        x = np.array([0.5, 3.0])
        tensor = self.model.actuation_jacobian(x)
        assert tensor.shape == (2, 2, 1)
        np.testing.assert_allclose(tensor[:, :, 0],
                                   [[0.0, 0.0], [0.0, 6.0]], atol=1e-15)

    def test_output_jacobian_form(self):
        np.testing.assert_array_equal(
            self.model.output_jacobian(np.array([4.0, 5.0])), [[1.0, 0.0]])


class TestUnicycleModel:
    def setup_method(self):
        self.model = unicycle_system()

    def test_dimensions(self):
        assert (self.model.n_x, self.model.n_u, self.model.n_z) == (3, 2, 2)

    def test_zero_drift(self):
        np.testing.assert_array_equal(
            self.model.drift(np.array([1.0, 2.0, 0.3])), np.zeros(3))

    def test_actuation_zero_heading(self):
        g = self.model.actuation(np.array([0.0, 0.0, 0.0]))
        np.testing.assert_array_equal(g, [[1.0, 0.0], [0.0, 0.0], [0.0, 1.0]])

    def test_actuation_quarter_turn(self):
        g = self.model.actuation(np.array([1.0, 1.0, math.pi / 2]))
        np.testing.assert_allclose(g, [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]],
                                   atol=1e-12)

    def test_output_jacobian_constant(self):
        np.testing.assert_array_equal(
            self.model.output_jacobian(np.array([7.0, -2.0, 1.1])),
            [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0]])

    def test_actuation_jacobian_slices(self):
        theta = 0.7
        tensor = self.model.actuation_jacobian(np.array([0.0, 0.0, theta]))
        assert tensor.shape == (3, 3, 2)
        # Only the v-column depends on the state, through theta.
        np.testing.assert_allclose(tensor[0, 2, 0], -math.sin(theta))
        np.testing.assert_allclose(tensor[1, 2, 0], math.cos(theta))
        tensor[0, 2, 0] = 0.0
        tensor[1, 2, 0] = 0.0
        np.testing.assert_array_equal(tensor, np.zeros((3, 3, 2)))


class TestDynamicsJacobian:
    def test_second_order_at_origin_zero_control(self):
        A = dynamics_jacobian(second_order_system(), np.zeros(2), np.zeros(1))
        np.testing.assert_allclose(A, [[-0.25, -1.0], [0.0, -0.5]], atol=1e-15)

    def test_zero_control_reduces_to_drift_jacobian(self):
        model = unicycle_system()
        x = np.array([1.0, -2.0, 0.4])
        np.testing.assert_array_equal(dynamics_jacobian(model, x, np.zeros(2)),
                                      model.drift_jacobian(x))

    def test_tensor_contraction_by_hand(self):
        A = dynamics_jacobian(second_order_system(), np.array([0.0, 1.0]),
                              np.array([2.0]))
        np.testing.assert_allclose(A, [[-0.25, -1.0], [0.0, 3.5]], atol=1e-15)


def _check_jacobians(model, states):
    for x in states:
        for i in range(model.n_x):
            fd = finite_diff_gradient(lambda s: model.drift(s)[i], x, 1e-6)
            np.testing.assert_allclose(model.drift_jacobian(x)[i], fd,
                                       rtol=1e-5, atol=1e-5)
            for k in range(model.n_u):
                fd = finite_diff_gradient(lambda s: model.actuation(s)[i, k],
                                          x, 1e-6)
                np.testing.assert_allclose(model.actuation_jacobian(x)[i, :, k],
                                           fd, rtol=1e-5, atol=1e-5)
        for j in range(model.n_z):
            fd = finite_diff_gradient(lambda s: model.output(s)[j], x, 1e-6)
            np.testing.assert_allclose(model.output_jacobian(x)[j], fd,
                                       rtol=1e-5, atol=1e-5)


class TestJacobianConsistency:
    def test_second_order(self):
        rng = np.random.default_rng(0)
        _check_jacobians(second_order_system(),
                         rng.uniform(-3.0, 3.0, size=(200, 2)))

    def test_unicycle(self):
        rng = np.random.default_rng(1)
        states = rng.uniform(-3.0, 3.0, size=(200, 3))
        states[:, 2] = rng.uniform(-math.pi, math.pi, size=200)
        _check_jacobians(unicycle_system(), states)


class TestClfDriftIdentity:
    def test_lyapunov_decays_at_unit_rate_along_drift(self):
        # grad(V) . f = -V for the shipped V; exercised at 1000 random states.
        model = second_order_system()
        stab = second_order_clf()
        rng = np.random.default_rng(2)
        for x in rng.uniform(-3.0, 3.0, size=(1000, 2)):
            residual = stab.grad_V(x) @ model.drift(x) + stab.V(x)
            assert abs(residual) <= 1e-10


class TestUnicycleNominal:
    def test_aligned_diagonal_heading(self):
        gains = UnicycleGains(d1=1.0, d2=1.0, d3=1.0, goal=(6.0, 6.0))
        u = unicycle_nominal(np.array([0.0, 0.0, math.pi / 4]), gains)
        assert u[0] == pytest.approx(math.sqrt(72.0), abs=1e-12)
        assert u[1] == pytest.approx(math.pi / 4, abs=1e-12)

    def test_at_goal_returns_zero(self):
        gains = UnicycleGains(d1=1.0, d2=2.0, d3=1.0, goal=(6.0, 6.0))
        np.testing.assert_array_equal(
            unicycle_nominal(np.array([6.0, 6.0, 0.3]), gains), [0.0, 0.0])

    def test_aligned_unit_distance(self):
        gains = UnicycleGains(d1=1.0, d2=2.0, d3=1.0, goal=(1.0, 0.0))
        u = unicycle_nominal(np.zeros(3), gains)
        assert u[0] == pytest.approx(1.0, abs=1e-12)
        assert u[1] == pytest.approx(0.0, abs=1e-12)

    def test_continuous_across_phi_switch(self):
        gains = UnicycleGains(d1=1.0, d2=2.0, d3=1.0, goal=(6.0, 6.0))
        theta_aligned = math.atan2(6.0, 6.0)
        exact = unicycle_nominal(np.array([0.0, 0.0, theta_aligned]), gains)
        near = unicycle_nominal(np.array([0.0, 0.0, theta_aligned - 1e-9]),
                                gains)
        assert abs(near[1] - exact[1]) <= 1e-6

    def test_gains_must_be_positive(self):
        with pytest.raises(ValueError):
            UnicycleGains(d1=0.0, d2=1.0, d3=1.0, goal=(6.0, 6.0))
        with pytest.raises(ValueError):
            UnicycleGains(d1=1.0, d2=-2.0, d3=1.0, goal=(6.0, 6.0))


class TestWrapToPi:
    @pytest.mark.parametrize("angle", [0.0, math.pi, -math.pi, 3 * math.pi,
                                       -3 * math.pi, 10.0, -10.0, 123.456])
    def test_range(self, angle):
        w = wrap_to_pi(angle)
        assert -math.pi < w <= math.pi
        # Same angle modulo a full turn.
        assert abs(math.remainder(w - angle, 2 * math.pi)) < 1e-9

    def test_pi_maps_to_pi(self):
        assert wrap_to_pi(math.pi) == pytest.approx(math.pi)
        assert wrap_to_pi(-math.pi) == pytest.approx(math.pi)


class TestAdmissibleSets:
    def test_contains_state(self):
        sets = AdmissibleSets(state_box=np.array([[-1.0, 1.0], [-2.0, 2.0]]),
                              control_box=np.array([[-5.0, 5.0]]))
        assert sets.contains_state(np.array([0.5, -1.5]))
        assert not sets.contains_state(np.array([1.5, 0.0]))

    def test_rejects_degenerate_box(self):
        with pytest.raises(ValueError):
            AdmissibleSets(state_box=np.array([[1.0, 1.0]]),
                           control_box=np.array([[-1.0, 1.0]]))

    def test_rejects_nonfinite_box(self):
        with pytest.raises(ValueError):
            AdmissibleSets(state_box=np.array([[-1.0, np.inf]]),
                           control_box=np.array([[-1.0, 1.0]]))
