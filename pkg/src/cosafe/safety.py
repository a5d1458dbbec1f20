"""Stability and safety constraint rows built from the state estimate.

Both rows are affine in the control u and are written in the form
a . u <= b so the controller can stack them directly:

  stability (CLF, soft):  grad_V.g(xhat) . u <= -grad_V.f(xhat) - gamma V(xhat) + delta
  safety    (CBF, hard): -grad_h.g(xhat) . u <=  grad_h.f(xhat) + alpha h(xhat) + innovation

The safety row carries the measurement innovation term
grad_h(xhat)^T S^-1 C^T R^-1 (z - q(xhat)), which is exactly the effect of the
observer's injection K (z - q(xhat)) on dh/dt along the estimate.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .numerics import spd_inverse
from .systems import SystemModel


@dataclass(frozen=True)
class StabilitySpec:
    """Lyapunov function V, its gradient, and the decay rate gamma."""

    V: Callable[[np.ndarray], float]
    grad_V: Callable[[np.ndarray], np.ndarray]
    gamma: float

    def __post_init__(self):
        if not self.gamma > 0.0:
            raise ValueError(f"gamma must be positive, got {self.gamma}")


@dataclass(frozen=True)
class SafetySpec:
    """Barrier function h (h >= 0 is safe), its gradient, and the rate alpha."""

    h: Callable[[np.ndarray], float]
    grad_h: Callable[[np.ndarray], np.ndarray]
    alpha: float

    def __post_init__(self):
        if not self.alpha > 0.0:
            raise ValueError(f"alpha must be positive, got {self.alpha}")


@dataclass(frozen=True)
class ErrorBoundConstants:
    """Constants of the observer error bound used by the initial-condition check.

    overshoot scales the initial error into the bound M(0); decay_rate is the
    exponential rate of the bound; error_radius is the basin radius the bound
    is valid in; barrier_lipschitz bounds |h(x) - h(y)| / |x - y|.
    """

    overshoot: float
    decay_rate: float
    error_radius: float
    barrier_lipschitz: float

    def __post_init__(self):
        if self.overshoot < 1.0:
            raise ValueError("overshoot must be >= 1")
        if min(self.decay_rate, self.error_radius, self.barrier_lipschitz) <= 0.0:
            raise ValueError("constants must be positive")


@dataclass(frozen=True)
class InitialConditionReport:
    """Advisory check that the guarantees' initial-set conditions hold."""

    error_norm: float
    error_bound: float
    error_radius: float
    error_ok: bool
    barrier_value: float
    barrier_required: float
    barrier_ok: bool

    @property
    def passed(self) -> bool:
        return self.error_ok and self.barrier_ok


def clf_row(spec: StabilitySpec, model: SystemModel, xhat: np.ndarray
            ) -> tuple[np.ndarray, float]:
    """Soft stability row (a, b) meaning a . u <= b + delta."""
    xhat = np.asarray(xhat, dtype=np.float64)
    grad = np.asarray(spec.grad_V(xhat), dtype=np.float64)
    lf_v = float(grad @ model.drift(xhat))
    a = grad @ model.actuation(xhat)
    b = -lf_v - spec.gamma * float(spec.V(xhat))
    return np.asarray(a, dtype=np.float64).reshape(model.n_u), float(b)


def cbf_row(spec: SafetySpec, model: SystemModel, xhat: np.ndarray,
            z: np.ndarray, S: np.ndarray, R: np.ndarray
            ) -> tuple[np.ndarray, float]:
    """Hard safety row (a, b) meaning a . u <= b.

    b includes the innovation term grad_h^T S^-1 C^T R^-1 (z - q(xhat)):
    L_f h + L_g h u + grad_h^T K (z - q) + alpha h >= 0, moved to
    -L_g h u <= L_f h + alpha h + innovation.
    """
    xhat = np.asarray(xhat, dtype=np.float64)
    z = np.asarray(z, dtype=np.float64)
    grad = np.asarray(spec.grad_h(xhat), dtype=np.float64)
    lf_h = float(grad @ model.drift(xhat))
    lg_h = grad @ model.actuation(xhat)
    C = model.output_jacobian(xhat)
    innovation = float(grad @ spd_inverse(S) @ C.T @ spd_inverse(R)
                       @ (z - model.output(xhat)))
    a = -np.asarray(lg_h, dtype=np.float64).reshape(model.n_u)
    b = lf_h + spec.alpha * float(spec.h(xhat)) + innovation
    return a, float(b)


def barrier_margin(spec: SafetySpec, x: np.ndarray) -> float:
    """h(x); nonnegative means safe."""
    return float(spec.h(np.asarray(x, dtype=np.float64)))


def validate_initial_conditions(constants: ErrorBoundConstants,
                                spec: SafetySpec, x0: np.ndarray,
                                xhat0: np.ndarray) -> InitialConditionReport:
    """Check the initial true state and estimate against the guarantee's sets.

    The true state must start with barrier margin at least twice
    barrier_lipschitz * M(0) where M(0) = overshoot * |x0 - xhat0|, and the
    initial estimation error must fall inside the bound's basin.  Advisory:
    a failed report does not stop a run.
    """
    x0 = np.asarray(x0, dtype=np.float64)
    xhat0 = np.asarray(xhat0, dtype=np.float64)
    error_norm = float(np.linalg.norm(x0 - xhat0))
    error_bound = constants.overshoot * error_norm
    barrier_value = barrier_margin(spec, x0)
    barrier_required = 2.0 * constants.barrier_lipschitz * error_bound
    return InitialConditionReport(
        error_norm=error_norm,
        error_bound=error_bound,
        error_radius=constants.error_radius,
        error_ok=error_norm < constants.error_radius,
        barrier_value=barrier_value,
        barrier_required=barrier_required,
        barrier_ok=barrier_value >= barrier_required,
    )


def worst_case_margin_diagnostic(spec: SafetySpec, model: SystemModel,
                                 states: np.ndarray, control_box: np.ndarray,
                                 correction: float) -> tuple[float, bool]:
    """Grid diagnostic for the error-robust barrier condition.

    For each sampled state, compute max over the control box of
    L_f h + L_g h u + alpha h - correction, where correction collects the
    worst-case observer-error contribution (measurement floor, uncertainty
    ceiling, Lipschitz constants, and the initial error bound collapsed into
    one scalar by the caller).  Returns the minimum over the grid and a flag
    that is True when the condition fails somewhere.  Diagnostic only.
    """
    control_box = np.asarray(control_box, dtype=np.float64)
    worst = np.inf
    for x in np.asarray(states, dtype=np.float64):
        grad = np.asarray(spec.grad_h(x), dtype=np.float64)
        lf_h = float(grad @ model.drift(x))
        lg_h = np.asarray(grad @ model.actuation(x), dtype=np.float64)
        best_u = float(np.sum(np.where(lg_h > 0.0,
                                       lg_h * control_box[:, 1],
                                       lg_h * control_box[:, 0])))
        value = lf_h + best_u + spec.alpha * float(spec.h(x)) - correction
        worst = min(worst, value)
    return worst, worst < 0.0


def second_order_clf(gamma: float = 1.0) -> StabilitySpec:
    """Lyapunov spec V = x1^4/4 + x2^2/2 for the second-order example.

    Along the drift alone, dV/dt = -V identically, which the tests pin down.
    """

    def V(x):
        return 0.25 * x[0] ** 4 + 0.5 * x[1] ** 2

    def grad_V(x):
        return np.array([x[0] ** 3, x[1]])

    return StabilitySpec(V=V, grad_V=grad_V, gamma=gamma)


def second_order_cbf(alpha: float = 1.0) -> SafetySpec:
    """Half-plane barrier h = -x1/2 + x2 + 1/2 for the second-order example."""

    def h(x):
        return -0.5 * x[0] + x[1] + 0.5

    def grad_h(x):
        return np.array([-0.5, 1.0])

    return SafetySpec(h=h, grad_h=grad_h, alpha=alpha)


def obstacle_cbf(center: np.ndarray, radius: float, alpha: float = 1.0) -> SafetySpec:
    """Circular keep-out barrier h = (x - cx)^2 + (y - cy)^2 - radius^2.

    Defined on planar-position states of any dimension >= 2; extra
    coordinates (heading) do not enter h.
    """
    center = np.asarray(center, dtype=np.float64)

    def h(x):
        return (x[0] - center[0]) ** 2 + (x[1] - center[1]) ** 2 - radius ** 2

    def grad_h(x):
        grad = np.zeros(np.asarray(x).shape[0])
        grad[0] = 2.0 * (x[0] - center[0])
        grad[1] = 2.0 * (x[1] - center[1])
        return grad

    return SafetySpec(h=h, grad_h=grad_h, alpha=alpha)
