"""Closed-loop episodes: plant, observer, and controller wired together.

The control is zero-order held at dt_ctrl; between control instants the true
state and the observer pair (xhat, P) are integrated as ONE coupled RK4
system at dt_int, with the measurement z = q(x_true), the linearization A,
and the output Jacobian C all refreshed at every RK4 stage.  Everything a run
produces is collected into an EpisodeLog, one row per integration boundary.

Runs are deterministic: the only randomness is the disturbance sample, drawn
once per episode from a generator seeded by the episode seed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .controller import (ConfidenceMetric, SolverResult, SolverWeights,
                         solve_clf_cbf, solve_tracking)
from .errors import InfeasibleCBF, NonFiniteDerivative, NotPositiveDefinite
from .numerics import rk4_step, spd_inverse, sym_eig
from .observer import (ObserverConfig, UncertaintyBoundsMonitor, observer_rhs,
                       pack_estimate, uncertainty_rate, unpack_estimate,
                       verify_uncertainty)
from .safety import SafetySpec, StabilitySpec, barrier_margin
from .systems import SystemModel, UnicycleGains, dynamics_jacobian, unicycle_nominal

PROBLEM_CLF_CBF = "clf-cbf"
PROBLEM_TRACKING = "tracking"


@dataclass(frozen=True)
class DisturbanceSpec:
    """One impulsive state jump: coordinate += sample ~ U(low, high), applied
    at the first integration boundary at or after `time`."""

    time: float
    coordinate: int
    low: float
    high: float

    def __post_init__(self):
        if self.low > self.high:
            raise ValueError("disturbance range must satisfy low <= high")
        if self.time < 0.0:
            raise ValueError("disturbance time must be nonnegative")


@dataclass
class EpisodeConfig:
    example: str
    model: SystemModel
    problem: str
    x0: np.ndarray
    xhat0: np.ndarray
    t_final: float
    dt_int: float
    dt_ctrl: float
    observer: ObserverConfig
    safety: SafetySpec
    weights: SolverWeights
    control_box: np.ndarray
    state_box: np.ndarray
    metric: ConfidenceMetric = ConfidenceMetric.MIN_EIGENVALUE
    stability: StabilitySpec | None = None
    gains: UnicycleGains | None = None
    disturbance: DisturbanceSpec | None = None
    seed: int = 0
    early_stop: bool = False
    goal_tolerance: float = 0.05
    stop_speed: float = 0.1
    config_hash: str = ""

    def __post_init__(self):
        self.x0 = np.asarray(self.x0, dtype=np.float64)
        self.xhat0 = np.asarray(self.xhat0, dtype=np.float64)
        self.control_box = np.asarray(self.control_box, dtype=np.float64)
        self.state_box = np.asarray(self.state_box, dtype=np.float64)
        if self.t_final <= 0.0:
            raise ValueError("t_final must be positive")
        ratio = self.dt_ctrl / self.dt_int
        if abs(ratio - round(ratio)) > 1e-9 or round(ratio) < 1:
            raise ValueError("dt_ctrl must be an integer multiple of dt_int")
        if self.problem not in (PROBLEM_CLF_CBF, PROBLEM_TRACKING):
            raise ValueError(f"unknown problem {self.problem!r}")
        if self.problem == PROBLEM_CLF_CBF and self.stability is None:
            raise ValueError("the clf-cbf program needs a stability spec")
        if self.problem == PROBLEM_TRACKING and self.gains is None:
            raise ValueError("the tracking program needs nominal-law gains")
        if not (np.all(self.x0 >= self.state_box[:, 0])
                and np.all(self.x0 <= self.state_box[:, 1])):
            raise ValueError("x0 must lie inside the state box")

    @property
    def steps_per_ctrl(self) -> int:
        return int(round(self.dt_ctrl / self.dt_int))

    @property
    def n_steps(self) -> int:
        return int(round(self.t_final / self.dt_int))


@dataclass
class EpisodeLog:
    t: np.ndarray
    x_true: np.ndarray
    x_hat: np.ndarray
    u: np.ndarray
    delta: np.ndarray
    eig_p: np.ndarray
    h_true: np.ndarray
    h_hat: np.ndarray
    v_true: np.ndarray
    metric_value: np.ndarray
    solver_status: list
    solver_iters: np.ndarray
    seed: int
    config_hash: str
    disturbance_sample: float | None
    monitor: UncertaintyBoundsMonitor
    config: EpisodeConfig
    terminated_early: bool = False
    error: str | None = None


def inject_disturbance(x: np.ndarray, spec: DisturbanceSpec,
                       rng: np.random.Generator) -> tuple[np.ndarray, float]:
    """Apply the impulse to a copy of x; returns (new state, drawn sample)."""
    sample = float(rng.uniform(spec.low, spec.high))
    x = np.asarray(x, dtype=np.float64).copy()
    x[spec.coordinate] += sample
    return x, sample


class _RowBuffer:
    def __init__(self):
        self.rows = {name: [] for name in
                     ("t", "x_true", "x_hat", "u", "delta", "eig_p", "h_true",
                      "h_hat", "v_true", "metric_value", "solver_status",
                      "solver_iters")}

    def append(self, **kwargs):
        for name, value in kwargs.items():
            self.rows[name].append(value)

    def arrays(self):
        out = {}
        for name, values in self.rows.items():
            if name == "solver_status":
                out[name] = list(values)
            elif name == "solver_iters":
                out[name] = np.array(values, dtype=np.int64)
            else:
                out[name] = np.array(values, dtype=np.float64)
        return out


def _coupled_rhs(model: SystemModel, observer: ObserverConfig,
                 u: np.ndarray, r_inv: np.ndarray):
    """Right-hand side of the joint (x_true, xhat, P) flow under a held u."""
    n_x = model.n_x

    def rhs(_t: float, y: np.ndarray) -> np.ndarray:
        x = y[:n_x]
        xhat, P = unpack_estimate(y[n_x:], n_x)
        dx = model.drift(x) + model.actuation(x) @ u
        z = model.output(x)
        A = dynamics_jacobian(model, xhat, u)
        C = model.output_jacobian(xhat)
        K = P @ C.T @ r_inv
        dxhat = observer_rhs(model, xhat, u, z, K)
        dP = uncertainty_rate(P, A, C, observer.Q, observer.R, observer.kappa,
                              r_inv=r_inv)
        return np.concatenate([dx, pack_estimate(dxhat, dP)])

    return rhs


def _solve_control(config: EpisodeConfig, xhat: np.ndarray, z: np.ndarray,
                   S: np.ndarray) -> SolverResult:
    if config.problem == PROBLEM_CLF_CBF:
        return solve_clf_cbf(config.model, config.stability, config.safety,
                             xhat, z, S, config.observer, config.weights,
                             config.control_box, config.metric)
    u_nom = unicycle_nominal(xhat, config.gains)
    return solve_tracking(config.model, config.safety, xhat, z, S,
                          config.observer, config.weights, config.control_box,
                          u_nom, config.metric)


def run_episode(config: EpisodeConfig) -> EpisodeLog:
    """Run one closed-loop episode and return its full log.

    Solver infeasibility, loss of definiteness of P, and non-finite dynamics
    terminate the episode early; the partial log is returned with the error
    recorded instead of raising.
    """
    model = config.model
    rng = np.random.default_rng(config.seed)
    sample: float | None = None
    if config.disturbance is not None:
        # Drawn up front so the stream is independent of when it lands.
        sample = float(rng.uniform(config.disturbance.low, config.disturbance.high))
    x = config.x0.astype(np.float64).copy()
    xhat = config.xhat0.astype(np.float64).copy()
    P = config.observer.P0.copy()
    r_inv = spd_inverse(config.observer.R)
    monitor = UncertaintyBoundsMonitor()
    buffer = _RowBuffer()
    u = np.zeros(model.n_u)
    delta = 0.0
    metric_value = math.nan
    status = "optimal"
    iters = 0
    disturbance_applied = config.disturbance is None
    terminated_early = False
    error: str | None = None

    def log_row(t: float, eig_now: np.ndarray):
        buffer.append(
            t=t, x_true=x.copy(), x_hat=xhat.copy(), u=u.copy(), delta=delta,
            eig_p=eig_now.copy(),
            h_true=barrier_margin(config.safety, x),
            h_hat=barrier_margin(config.safety, xhat),
            v_true=(float(config.stability.V(x))
                    if config.stability is not None else math.nan),
            metric_value=metric_value, solver_status=status,
            solver_iters=iters)

    n_steps = config.n_steps
    per_ctrl = config.steps_per_ctrl
    for k in range(n_steps + 1):
        t = k * config.dt_int
        if not disturbance_applied and t >= config.disturbance.time - 1e-12:
            x[config.disturbance.coordinate] += sample
            disturbance_applied = True
        eigs = sym_eig(P).eigenvalues
        monitor.record(t, eigs)
        if k % per_ctrl == 0 and k < n_steps:
            z = model.output(x)
            try:
                S = spd_inverse(P)
                result = _solve_control(config, xhat, z, S)
            except (InfeasibleCBF, NotPositiveDefinite) as exc:
                error = f"{type(exc).__name__}: {exc}"
                if isinstance(exc, InfeasibleCBF):
                    status = "infeasible_cbf"
                log_row(t, eigs)
                break
            u = result.u
            delta = result.delta
            metric_value = result.metric_value
            status = result.status
            iters = result.iterations
        log_row(t, eigs)
        if (config.early_stop and config.gains is not None
                and k % per_ctrl == 0):
            dist = math.hypot(x[0] - config.gains.goal[0],
                              x[1] - config.gains.goal[1])
            if dist <= config.goal_tolerance and abs(u[0]) <= config.stop_speed:
                terminated_early = True
                break
        if k == n_steps:
            break
        rhs = _coupled_rhs(model, config.observer, u, r_inv)
        try:
            y = np.concatenate([x, pack_estimate(xhat, P)])
            y = rk4_step(rhs, t, y, config.dt_int)
            x = y[:model.n_x]
            xhat, P = unpack_estimate(y[model.n_x:], model.n_x)
            P = verify_uncertainty(P)
        except (NotPositiveDefinite, NonFiniteDerivative) as exc:
            error = f"{type(exc).__name__}: {exc}"
            break

    arrays = buffer.arrays()
    return EpisodeLog(seed=config.seed, config_hash=config.config_hash,
                      disturbance_sample=sample, monitor=monitor,
                      config=config,
                      terminated_early=terminated_early or error is not None,
                      error=error, **arrays)


def settling_time(t: np.ndarray, error: np.ndarray, fraction: float = 0.1
                  ) -> float:
    """Earliest time after which |error| stays below fraction * |error[0]|.

    Returns NaN when the initial error is (numerically) zero or the error
    never settles within the logged horizon.
    """
    initial = abs(float(error[0]))
    if initial < 1e-12:
        return math.nan
    threshold = fraction * initial
    below = np.abs(error) < threshold
    if not below[-1]:
        return math.nan
    # Walk back from the end to the last crossing.
    idx = len(below) - 1
    while idx > 0 and below[idx - 1]:
        idx -= 1
    return float(t[idx])


def compute_metrics(log: EpisodeLog, goal_radius: float = 0.2) -> dict:
    """Summary scalars of one episode, used by the CLI and the comparisons."""
    metrics: dict = {}
    metrics["min_h_true"] = float(np.min(log.h_true))
    metrics["initial_state_norm"] = float(np.linalg.norm(log.x_true[0]))
    metrics["final_state_norm"] = float(np.linalg.norm(log.x_true[-1]))
    est_error = log.x_true - log.x_hat
    metrics["final_est_error"] = float(np.linalg.norm(est_error[-1]))
    metrics["final_eig_p_max"] = float(log.eig_p[-1, -1])
    metrics["final_eig_p_min"] = float(log.eig_p[-1, 0])
    metrics["max_u_inf"] = float(np.max(np.abs(log.u))) if log.u.size else 0.0
    for k in range(log.u.shape[1]):
        metrics[f"max_abs_u{k}"] = float(np.max(np.abs(log.u[:, k])))
    for i in range(log.x_true.shape[1]):
        metrics[f"settling_time_x{i}"] = settling_time(log.t, est_error[:, i])
    metrics["p_lo"] = float(log.monitor.p_lo)
    metrics["p_hi"] = float(log.monitor.p_hi)
    metrics["p_assumption_violated"] = bool(log.monitor.assumption_violated)
    metrics["terminated_early"] = bool(log.terminated_early)
    metrics["t_final_logged"] = float(log.t[-1])
    metrics["error"] = log.error if log.error else "none"
    if log.config.gains is not None:
        goal = log.config.gains.goal
        dist = math.hypot(log.x_true[-1, 0] - goal[0],
                          log.x_true[-1, 1] - goal[1])
        metrics["final_goal_distance"] = float(dist)
        metrics["goal_reached"] = bool(dist <= goal_radius and log.error is None)
    return metrics
