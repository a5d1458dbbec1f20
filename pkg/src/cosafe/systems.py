"""Control-affine system models with hand-coded Jacobians.

A model is dx/dt = f(x) + g(x) u with output z = q(x).  Jacobians are written
out analytically (no automatic differentiation) because the observer refreshes
them at every integration stage and the test suite cross-checks each one
against central finite differences.

The actuation Jacobian is the rank-3 tensor dg/dx with shape
(n_x, n_x, n_u): slice [:, :, k] is the Jacobian of column k of g, so the
state matrix of the linearized closed loop is df/dx + sum_k u_k * dg/dx[:, :, k].
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np


@dataclass(frozen=True)
class SystemModel:
    name: str
    n_x: int
    n_u: int
    n_z: int
    drift: Callable[[np.ndarray], np.ndarray]
    actuation: Callable[[np.ndarray], np.ndarray]
    output: Callable[[np.ndarray], np.ndarray]
    drift_jacobian: Callable[[np.ndarray], np.ndarray]
    actuation_jacobian: Callable[[np.ndarray], np.ndarray]
    output_jacobian: Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True)
class AdmissibleSets:
    """Box bounds for states and controls; rows are (low, high) per coordinate."""

    state_box: np.ndarray
    control_box: np.ndarray

    def __post_init__(self):
        for name, box in (("state_box", self.state_box), ("control_box", self.control_box)):
            box = np.asarray(box, dtype=np.float64)
            if box.ndim != 2 or box.shape[1] != 2:
                raise ValueError(f"{name} must have shape (dim, 2)")
            if not np.all(np.isfinite(box)):
                raise ValueError(f"{name} must be finite")
            if not np.all(box[:, 0] < box[:, 1]):
                raise ValueError(f"{name} rows must satisfy low < high")
            object.__setattr__(self, name, box)

    def contains_state(self, x: np.ndarray) -> bool:
        x = np.asarray(x, dtype=np.float64)
        return bool(np.all(x >= self.state_box[:, 0]) and np.all(x <= self.state_box[:, 1]))


@dataclass(frozen=True)
class UnicycleGains:
    """Gains and goal for the pose-stabilizing unicycle law."""

    d1: float = 1.0
    d2: float = 2.0
    d3: float = 1.0
    goal: np.ndarray = field(default_factory=lambda: np.array([6.0, 6.0]))

    def __post_init__(self):
        if min(self.d1, self.d2, self.d3) <= 0.0:
            raise ValueError("unicycle gains must be positive")
        object.__setattr__(self, "goal", np.asarray(self.goal, dtype=np.float64))


def second_order_system() -> SystemModel:
    """Planar system with cubic drift and a state-dependent input gain.

    dx1/dt = -x1/4 - x2
    dx2/dt = x1^3 - x2/2 + (x2^2 + 1) u
    z = x1
    """

    def drift(x):
        x = np.asarray(x, dtype=np.float64)
        return np.array([-0.25 * x[0] - x[1], x[0] ** 3 - 0.5 * x[1]])

    def actuation(x):
        x = np.asarray(x, dtype=np.float64)
        return np.array([[0.0], [x[1] ** 2 + 1.0]])

    def output(x):
        x = np.asarray(x, dtype=np.float64)
        return np.array([x[0]])

    def drift_jacobian(x):
        x = np.asarray(x, dtype=np.float64)
        return np.array([[-0.25, -1.0], [3.0 * x[0] ** 2, -0.5]])

    def actuation_jacobian(x):
        x = np.asarray(x, dtype=np.float64)
        tensor = np.zeros((2, 2, 1))
        # d/dx2 of the input gain x2^2 + 1 in the second row of g.
        tensor[1, 1, 0] = 2.0 * x[1]
        return tensor

    def output_jacobian(x):
        return np.array([[1.0, 0.0]])

    return SystemModel("second-order", 2, 1, 1, drift, actuation, output,
                       drift_jacobian, actuation_jacobian, output_jacobian)


def unicycle_system() -> SystemModel:
    """Unicycle with planar position measurements.

    State (x, y, theta), controls (v, omega):
    dx/dt = v cos(theta), dy/dt = v sin(theta), dtheta/dt = omega, z = (x, y).
    Heading is never measured directly; it only becomes observable through
    motion, which is what makes the confidence objective interesting here.
    """

    def drift(x):
        return np.zeros(3)

    def actuation(x):
        x = np.asarray(x, dtype=np.float64)
        c, s = math.cos(x[2]), math.sin(x[2])
        return np.array([[c, 0.0], [s, 0.0], [0.0, 1.0]])

    def output(x):
        x = np.asarray(x, dtype=np.float64)
        return np.array([x[0], x[1]])

    def drift_jacobian(x):
        return np.zeros((3, 3))

    def actuation_jacobian(x):
        x = np.asarray(x, dtype=np.float64)
        c, s = math.cos(x[2]), math.sin(x[2])
        tensor = np.zeros((3, 3, 2))
        # Only the velocity column depends on the state (through theta).
        tensor[0, 2, 0] = -s
        tensor[1, 2, 0] = c
        return tensor

    def output_jacobian(x):
        return np.array([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0]])

    return SystemModel("unicycle", 3, 2, 2, drift, actuation, output,
                       drift_jacobian, actuation_jacobian, output_jacobian)


def dynamics_jacobian(model: SystemModel, xhat: np.ndarray, u: np.ndarray) -> np.ndarray:
    """State matrix of the linearized dynamics at (xhat, u):
    A = df/dx + sum_k u_k * dg/dx[:, :, k]."""
    xhat = np.asarray(xhat, dtype=np.float64)
    u = np.asarray(u, dtype=np.float64)
    a = model.drift_jacobian(xhat).astype(np.float64, copy=True)
    tensor = model.actuation_jacobian(xhat)
    for k in range(model.n_u):
        a += u[k] * tensor[:, :, k]
    return a


def wrap_to_pi(angle: float) -> float:
    """Wrap an angle to the half-open interval (-pi, pi]."""
    wrapped = math.fmod(angle + math.pi, 2.0 * math.pi)
    if wrapped <= 0.0:
        wrapped += 2.0 * math.pi
    return wrapped - math.pi


def unicycle_nominal(xhat: np.ndarray, gains: UnicycleGains) -> np.ndarray:
    """Goal-seeking unicycle law (v, omega) from the estimated pose.

    With range e to the goal and bearing error phi = atan2(gy - y, gx - x) - theta
    (wrapped to (-pi, pi]):

        v     = d1 e cos(phi)
        omega = d2 phi + d1 cos(phi) sin(phi) [phi + d3 (phi + theta)] / phi

    The sin(phi)/phi factor is replaced by its limit 1 when |phi| < 1e-8, which
    keeps omega continuous through phi = 0.  Exactly at the goal the law
    returns zero control; episode termination handles the rest.
    """
    xhat = np.asarray(xhat, dtype=np.float64)
    dx = gains.goal[0] - xhat[0]
    dy = gains.goal[1] - xhat[1]
    e = math.hypot(dx, dy)
    if e < 1e-12:
        return np.zeros(2)
    theta = xhat[2]
    phi = wrap_to_pi(math.atan2(dy, dx) - theta)
    cphi = math.cos(phi)
    sinc = math.sin(phi) / phi if abs(phi) >= 1e-8 else 1.0
    v = gains.d1 * e * cphi
    omega = gains.d2 * phi + gains.d1 * cphi * sinc * (phi + gains.d3 * (phi + theta))
    return np.array([v, omega])
