"""Observer gain, Riccati flows for P and S, stepping, and the bounds monitor."""

import math

import numpy as np
import pytest

from cosafe.errors import NotPositiveDefinite
from cosafe.numerics import rk4_step, symmetrize
from cosafe.observer import (ObserverConfig, ObserverState,
                             UncertaintyBoundsMonitor, confidence_rate,
                             monitor_update, observer_gain, observer_rhs,
                             observer_step, predict_confidence,
                             uncertainty_rate)
from cosafe.systems import SystemModel, dynamics_jacobian, second_order_system


def scalar_integrator_model() -> SystemModel:
    """1-D plant with zero dynamics and direct output, for Riccati oracles."""
    return SystemModel(
        name="scalar",
        n_x=1, n_u=1, n_z=1,
        drift=lambda x: np.zeros(1),
        actuation=lambda x: np.zeros((1, 1)),
        output=lambda x: x.copy(),
        drift_jacobian=lambda x: np.zeros((1, 1)),
        actuation_jacobian=lambda x: np.zeros((1, 1, 1)),
        output_jacobian=lambda x: np.ones((1, 1)),
    )


class TestObserverGain:
    def test_identity_pieces(self):
        K = observer_gain(np.eye(2), np.array([[1.0, 0.0]]), np.array([[1.0]]))
        np.testing.assert_allclose(K, [[1.0], [0.0]], atol=1e-14)

    def test_hand_product(self):
        K = observer_gain(np.diag([2.0, 3.0]), np.array([[1.0, 0.0]]),
                          np.array([[2.0]]))
        np.testing.assert_allclose(K, [[1.0], [0.0]], atol=1e-14)

    def test_zero_output_matrix(self):
        K = observer_gain(np.eye(2), np.zeros((1, 2)), np.array([[1.0]]))
        np.testing.assert_array_equal(K, np.zeros((2, 1)))


class TestRiccatiRates:
    def test_pure_process_noise(self):
        rate = uncertainty_rate(np.eye(2), np.zeros((2, 2)), np.zeros((1, 2)),
                                np.eye(2), np.eye(1), 0.0)
        np.testing.assert_allclose(rate, np.eye(2), atol=1e-14)

    def test_information_loss_term(self):
        rate = uncertainty_rate(np.eye(2), np.zeros((2, 2)),
                                np.array([[1.0, 0.0]]), np.zeros((2, 2)),
                                np.eye(1), 0.0)
        np.testing.assert_allclose(rate, -np.diag([1.0, 0.0]), atol=1e-14)

    def test_kappa_scaling(self):
        rate = uncertainty_rate(np.diag([2.0, 3.0]), np.zeros((2, 2)),
                                np.zeros((1, 2)), np.zeros((2, 2)), np.eye(1),
                                1.0)
        np.testing.assert_allclose(rate, np.diag([2.0, 3.0]), atol=1e-14)

    def test_confidence_mirror_case(self):
        rate = confidence_rate(np.eye(2), np.zeros((2, 2)), np.zeros((1, 2)),
                               np.eye(2), np.eye(1), 0.0)
        np.testing.assert_allclose(rate, -np.eye(2), atol=1e-14)

    def test_confidence_information_gain(self):
        rate = confidence_rate(np.zeros((2, 2)), np.zeros((2, 2)),
                               np.array([[1.0, 0.0]]), np.zeros((2, 2)),
                               np.eye(1), 0.0)
        np.testing.assert_allclose(rate, np.diag([1.0, 0.0]), atol=1e-14)

    def test_dual_rate_identity(self):
        # S = P^-1 implies dS/dt = -S dP/dt S; both rates encode the same flow.
        rng = np.random.default_rng(5)
        for _ in range(50):
            n = int(rng.integers(2, 5))
            n_z = int(rng.integers(1, n + 1))
            a = rng.normal(size=(n, n))
            P = symmetrize(a @ a.T + n * np.eye(n))
            S = np.linalg.inv(P)
            A = rng.normal(size=(n, n))
            C = rng.normal(size=(n_z, n))
            q = rng.normal(size=(n, n))
            Q = symmetrize(q @ q.T + 0.5 * np.eye(n))
            R = np.eye(n_z) * rng.uniform(0.5, 2.0)
            kappa = rng.uniform(0.0, 1.0)
            dP = uncertainty_rate(P, A, C, Q, R, kappa)
            dS = confidence_rate(S, A, C, Q, R, kappa)
            np.testing.assert_allclose(dS, -S @ dP @ S, atol=1e-8)

    def test_r_inv_shortcut_matches(self):
        rng = np.random.default_rng(6)
        P = symmetrize(rng.normal(size=(2, 2)) @ np.eye(2) + 3 * np.eye(2))
        A = rng.normal(size=(2, 2))
        C = rng.normal(size=(1, 2))
        Q = np.eye(2)
        R = np.array([[0.1]])
        np.testing.assert_allclose(
            uncertainty_rate(P, A, C, Q, R, 0.3),
            uncertainty_rate(P, A, C, Q, R, 0.3, r_inv=np.array([[10.0]])),
            atol=1e-12)


class TestObserverRhs:
    def test_zero_innovation_is_open_loop(self):
        model = second_order_system()
        xhat = np.array([0.5, -0.3])
        u = np.array([0.7])
        K = np.array([[1.0], [2.0]])
        rhs = observer_rhs(model, xhat, u, model.output(xhat), K)
        np.testing.assert_allclose(
            rhs, model.drift(xhat) + model.actuation(xhat) @ u, atol=1e-14)

    def test_innovation_term_only(self):
        model = second_order_system()
        rhs = observer_rhs(model, np.zeros(2), np.zeros(1), np.array([1.0]),
                           np.array([[1.0], [0.0]]))
        np.testing.assert_allclose(rhs, [1.0, 0.0], atol=1e-14)

    def test_equilibrium(self):
        model = second_order_system()
        rhs = observer_rhs(model, np.zeros(2), np.zeros(1), np.array([0.0]),
                           np.array([[1.0], [0.0]]))
        np.testing.assert_array_equal(rhs, [0.0, 0.0])


class TestObserverStep:
    def test_tiny_step_is_near_identity(self):
        model = second_order_system()
        config = ObserverConfig(kappa=0.1, Q=np.eye(2), R=np.array([[0.1]]),
                                P0=np.eye(2))
        state = ObserverState(xhat=np.array([1.0, -1.0]), P=np.eye(2), t=0.0)
        out = observer_step(model, config, state, np.array([0.5]),
                            np.array([0.9]), 1e-8)
        np.testing.assert_allclose(out.xhat, state.xhat, atol=1e-6)
        np.testing.assert_allclose(out.P, state.P, atol=1e-6)
        assert out.t == pytest.approx(1e-8)

    def test_scalar_riccati_closed_form(self):
        # With zero dynamics, direct output, Q=R=1, kappa=0: pdot = 1 - p^2,
        # so p(t) = (1 + c e^{-2t}) / (1 - c e^{-2t}) with c = (p0-1)/(p0+1).
        model = scalar_integrator_model()
        config = ObserverConfig(kappa=0.0, Q=np.eye(1), R=np.eye(1),
                                P0=np.array([[4.0]]))
        state = ObserverState(xhat=np.zeros(1), P=np.array([[4.0]]), t=0.0)
        dt = 1e-3
        for _ in range(1000):
            state = observer_step(model, config, state, np.zeros(1),
                                  np.zeros(1), dt)
        c = (4.0 - 1.0) / (4.0 + 1.0)
        expected = (1.0 + c * math.exp(-2.0)) / (1.0 - c * math.exp(-2.0))
        assert state.P[0, 0] == pytest.approx(expected, abs=1e-6)
        np.testing.assert_array_equal(state.xhat, [0.0])

    def test_zero_innovation_zero_drift_keeps_estimate(self):
        model = scalar_integrator_model()
        config = ObserverConfig(kappa=0.0, Q=np.eye(1), R=np.eye(1),
                                P0=np.eye(1))
        state = ObserverState(xhat=np.array([0.7]), P=np.eye(1), t=0.0)
        out = observer_step(model, config, state, np.zeros(1),
                            np.array([0.7]), 0.05)
        np.testing.assert_allclose(out.xhat, [0.7], atol=1e-12)

    def test_definiteness_loss_raises(self):
        # Huge kappa-free information loss drives P through zero in one step.
        model = scalar_integrator_model()
        config = ObserverConfig(kappa=0.0, Q=1e-12 * np.eye(1),
                                R=1e-6 * np.eye(1), P0=np.eye(1))
        state = ObserverState(xhat=np.zeros(1), P=np.eye(1), t=0.0)
        with pytest.raises(NotPositiveDefinite):
            observer_step(model, config, state, np.zeros(1), np.zeros(1), 5.0)


class TestDualPropagation:
    def test_p_and_s_stay_mutually_inverse(self):
        # Coupled flow on the second-order scenario: truth, estimate, P, S.
        model = second_order_system()
        Q = np.eye(2)
        R = np.array([[0.1]])
        kappa = 0.1
        u = np.zeros(1)
        P0 = np.eye(2)

        def rhs(t, y):
            x, xhat, P, S = y[:2], y[2:4], y[4:8].reshape(2, 2), y[8:].reshape(2, 2)
            A = dynamics_jacobian(model, xhat, u)
            C = model.output_jacobian(xhat)
            K = observer_gain(P, C, R)
            dx = model.drift(x)
            dxhat = observer_rhs(model, xhat, u, model.output(x), K)
            dP = uncertainty_rate(P, A, C, Q, R, kappa)
            dS = confidence_rate(S, A, C, Q, R, kappa)
            return np.concatenate([dx, dxhat, dP.reshape(-1), dS.reshape(-1)])

        y = np.concatenate([np.array([-2.0, 2.2]), np.array([-1.5, 1.4]),
                            P0.reshape(-1), np.linalg.inv(P0).reshape(-1)])
        dt = 1e-3
        for k in range(1000):
            y = rk4_step(rhs, k * dt, y, dt)
        P = y[4:8].reshape(2, 2)
        S = y[8:].reshape(2, 2)
        assert np.linalg.norm(S - np.linalg.inv(P)) <= 1e-5


class TestPredictConfidence:
    def test_zero_horizon(self):
        S = np.array([[2.0, 0.5], [0.5, 1.0]])
        out = predict_confidence(S, np.zeros((2, 2)), np.zeros((1, 2)),
                                 np.zeros((2, 2)), np.eye(1), 0.0, 0.0)
        np.testing.assert_array_equal(out, S)

    def test_information_gain_hand_value(self):
        out = predict_confidence(np.eye(2), np.zeros((2, 2)),
                                 np.array([[1.0, 0.0]]), np.zeros((2, 2)),
                                 np.eye(1), 0.0, 0.1)
        np.testing.assert_allclose(out, np.diag([1.1, 1.0]), atol=1e-14)

    def test_definitional_equality(self):
        rng = np.random.default_rng(9)
        S = symmetrize(rng.normal(size=(2, 2)) + 3 * np.eye(2))
        A = rng.normal(size=(2, 2))
        C = rng.normal(size=(1, 2))
        Q = np.eye(2)
        R = np.array([[0.5]])
        expected = S + 0.01 * confidence_rate(S, A, C, Q, R, 0.2)
        out = predict_confidence(S, A, C, Q, R, 0.2, 0.01)
        np.testing.assert_array_equal(out, symmetrize(expected))

    def test_affine_in_control(self):
        # A depends affinely on u, so predictions superpose exactly.
        model = second_order_system()
        rng = np.random.default_rng(10)
        xhat = np.array([0.3, -0.8])
        S = symmetrize(rng.normal(size=(2, 2)) + 4 * np.eye(2))
        C = model.output_jacobian(xhat)
        Q = np.eye(2)
        R = np.array([[0.1]])

        def pred(u):
            A = dynamics_jacobian(model, xhat, u)
            return predict_confidence(S, A, C, Q, R, 0.1, 0.01)

        u1 = np.array([1.7])
        u2 = np.array([-0.4])
        lhs = pred(u1) + pred(u2) - pred(np.zeros(1))
        np.testing.assert_allclose(lhs, pred(u1 + u2), atol=1e-12)


class TestBoundsMonitor:
    def test_first_update(self):
        m = monitor_update(UncertaintyBoundsMonitor(), 0.0, np.diag([1.0, 2.0]))
        assert m.p_lo == pytest.approx(1.0)
        assert m.p_hi == pytest.approx(2.0)
        assert not m.assumption_violated

    def test_running_extremes(self):
        m = UncertaintyBoundsMonitor()
        m.update(0.0, np.diag([1.0, 2.0]))
        m.update(0.1, np.diag([0.5, 3.0]))
        assert m.p_lo == pytest.approx(0.5)
        assert m.p_hi == pytest.approx(3.0)
        assert len(m.history) == 2

    def test_flags_indefinite(self):
        m = UncertaintyBoundsMonitor()
        m.update(0.0, np.diag([-0.1, 1.0]))
        assert m.assumption_violated


class TestObserverConfig:
    def test_rejects_negative_kappa(self):
        with pytest.raises(ValueError):
            ObserverConfig(kappa=-0.1, Q=np.eye(2), R=np.eye(1), P0=np.eye(2))

    def test_rejects_indefinite_q(self):
        with pytest.raises(NotPositiveDefinite):
            ObserverConfig(kappa=0.0, Q=np.array([[1.0, 2.0], [2.0, 1.0]]),
                           R=np.eye(1), P0=np.eye(2))
