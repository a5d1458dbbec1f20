"""Nonlinear observer with matrix-valued uncertainty propagation.

The estimate follows

    dxhat/dt = f(xhat) + g(xhat) u + K (z - q(xhat)),   K = P C^T R^-1,

and the uncertainty matrix P follows the inflated Riccati flow

    dP/dt = kappa P + A P + P A^T - P C^T R^-1 C P + Q,

with A the state matrix of the linearized dynamics at (xhat, u) and
C = dq/dx(xhat).  The confidence matrix S = P^-1 obeys the dual flow

    dS/dt = -kappa S - A^T S - S A + C^T R^-1 C - S Q S,

which is what the controller's one-step prediction uses: S(t + dt) is affine
in the control because A is.

P is the integrated quantity; S is recovered by inversion where needed, and
both flows are exposed so the duality can be checked directly.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import NotPositiveDefinite
from .numerics import rk4_step, spd_cholesky, spd_inverse, sym_eig, symmetrize
from .systems import SystemModel, dynamics_jacobian


@dataclass(frozen=True)
class ObserverConfig:
    """kappa inflates the uncertainty growth rate; Q, R, P0 are the process
    noise, measurement noise, and initial uncertainty matrices."""

    kappa: float
    Q: np.ndarray
    R: np.ndarray
    P0: np.ndarray

    def __post_init__(self):
        for name in ("Q", "R", "P0"):
            m = symmetrize(np.asarray(getattr(self, name), dtype=np.float64))
            object.__setattr__(self, name, m)
        if self.kappa < 0.0:
            raise ValueError("kappa must be nonnegative")
        for name in ("Q", "R", "P0"):
            spd_cholesky(getattr(self, name))


@dataclass
class ObserverState:
    xhat: np.ndarray
    P: np.ndarray
    t: float


@dataclass
class UncertaintyBoundsMonitor:
    """Tracks running extremes of the eigenvalues of P over an episode.

    The observer's error bound assumes p_lo I <= P <= p_hi I for positive
    constants; the monitor records the empirical extremes so a run can report
    whether that assumption held, and flags any loss of definiteness.
    """

    p_lo: float = np.inf
    p_hi: float = 0.0
    assumption_violated: bool = False
    history: list = field(default_factory=list)

    def record(self, t: float, eigenvalues: np.ndarray) -> None:
        lo = float(eigenvalues[0])
        hi = float(eigenvalues[-1])
        self.p_lo = min(self.p_lo, lo)
        self.p_hi = max(self.p_hi, hi)
        if lo <= 0.0:
            self.assumption_violated = True
        self.history.append((t, lo, hi))

    def update(self, t: float, P: np.ndarray) -> "UncertaintyBoundsMonitor":
        self.record(t, sym_eig(P).eigenvalues)
        return self


def monitor_update(monitor: UncertaintyBoundsMonitor, t: float,
                   P: np.ndarray) -> UncertaintyBoundsMonitor:
    return monitor.update(t, P)


def observer_gain(P: np.ndarray, C: np.ndarray, R: np.ndarray) -> np.ndarray:
    """Measurement-injection gain K = P C^T R^-1."""
    P = np.asarray(P, dtype=np.float64)
    C = np.asarray(C, dtype=np.float64)
    return P @ C.T @ spd_inverse(R)


def uncertainty_rate(P: np.ndarray, A: np.ndarray, C: np.ndarray,
                     Q: np.ndarray, R: np.ndarray, kappa: float,
                     r_inv: np.ndarray | None = None) -> np.ndarray:
    """Right-hand side of the uncertainty flow for P (symmetrized).

    r_inv may be supplied to avoid re-inverting a constant R in tight loops.
    """
    P = np.asarray(P, dtype=np.float64)
    if r_inv is None:
        r_inv = spd_inverse(R)
    rate = kappa * P + A @ P + P @ A.T - P @ C.T @ r_inv @ C @ P + Q
    return symmetrize(rate)


def confidence_rate(S: np.ndarray, A: np.ndarray, C: np.ndarray,
                    Q: np.ndarray, R: np.ndarray, kappa: float,
                    r_inv: np.ndarray | None = None) -> np.ndarray:
    """Right-hand side of the dual flow for S = P^-1 (symmetrized)."""
    S = np.asarray(S, dtype=np.float64)
    if r_inv is None:
        r_inv = spd_inverse(R)
    rate = -kappa * S - A.T @ S - S @ A + C.T @ r_inv @ C - S @ Q @ S
    return symmetrize(rate)


def observer_rhs(model: SystemModel, xhat: np.ndarray, u: np.ndarray,
                 z: np.ndarray, K: np.ndarray) -> np.ndarray:
    """Estimate derivative f(xhat) + g(xhat) u + K (z - q(xhat))."""
    xhat = np.asarray(xhat, dtype=np.float64)
    u = np.asarray(u, dtype=np.float64)
    z = np.asarray(z, dtype=np.float64)
    return (model.drift(xhat) + model.actuation(xhat) @ u
            + K @ (z - model.output(xhat)))


def pack_estimate(xhat: np.ndarray, P: np.ndarray) -> np.ndarray:
    return np.concatenate([np.asarray(xhat, dtype=np.float64),
                           np.asarray(P, dtype=np.float64).reshape(-1)])


def unpack_estimate(y: np.ndarray, n_x: int) -> tuple[np.ndarray, np.ndarray]:
    return y[:n_x], y[n_x:].reshape(n_x, n_x)


def verify_uncertainty(P: np.ndarray) -> np.ndarray:
    """Symmetrize P and fail with NotPositiveDefinite if it lost definiteness."""
    P = symmetrize(P)
    spd_cholesky(P)
    return P


def observer_step(model: SystemModel, config: ObserverConfig,
                  state: ObserverState, u: np.ndarray, z: np.ndarray,
                  dt: float) -> ObserverState:
    """Advance (xhat, P) one RK4 step with the measurement z held constant.

    A and C are re-linearized at every RK4 stage.  After the step P is
    symmetrized and its definiteness is checked by Cholesky pivots; a failure
    raises NotPositiveDefinite rather than letting an indefinite P continue.
    """
    n_x = model.n_x
    u = np.asarray(u, dtype=np.float64)
    z = np.asarray(z, dtype=np.float64)

    def rhs(_t: float, y: np.ndarray) -> np.ndarray:
        xhat, P = unpack_estimate(y, n_x)
        A = dynamics_jacobian(model, xhat, u)
        C = model.output_jacobian(xhat)
        K = observer_gain(P, C, config.R)
        dxhat = observer_rhs(model, xhat, u, z, K)
        dP = uncertainty_rate(P, A, C, config.Q, config.R, config.kappa)
        return pack_estimate(dxhat, dP)

    y_next = rk4_step(rhs, state.t, pack_estimate(state.xhat, state.P), dt)
    xhat_next, p_next = unpack_estimate(y_next, n_x)
    p_next = verify_uncertainty(p_next)
    return ObserverState(xhat=xhat_next, P=p_next, t=state.t + dt)


def predict_confidence(S: np.ndarray, A: np.ndarray, C: np.ndarray,
                       Q: np.ndarray, R: np.ndarray, kappa: float,
                       dt_ctrl: float) -> np.ndarray:
    """First-order prediction S(t + dt_ctrl) = S + dt_ctrl * dS/dt.

    Affine in the control through A, which is what makes the controller's
    confidence objective a concave function of u.
    """
    S = np.asarray(S, dtype=np.float64)
    return symmetrize(S + dt_ctrl * confidence_rate(S, A, C, Q, R, kappa))
