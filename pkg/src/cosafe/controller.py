"""Confidence-aware control synthesis.

Two convex programs over the control box U:

  solve_clf_cbf:   min_u,delta  |u|^2 + c2 delta^2 - c1 m(u)
                   s.t. stability row (relaxed by delta), safety row (hard)

  solve_tracking:  min_u        |u - u_nominal|^2 - c1 m(u)
                   s.t. safety row (hard)

m(u) is a concave confidence metric (smallest eigenvalue, trace, or
log-determinant) of the one-step confidence prediction S(t + dt_ctrl), which
is affine in u.  With c1 = 0 both programs reduce to the familiar quadratic
safety filters.

The concave term is handled by cutting planes: each iterate adds the
linearization m(u_j) + grad_j . (u - u_j), which over-estimates m everywhere,
and an epigraph variable s <= every cut replaces m in the master problem.
Masters are small dense QPs solved exactly by enumerating candidate active
sets in ascending size; the first KKT-consistent subset is optimal (the
minimizer is unique) and automatically has the fewest active constraints.
"""

from __future__ import annotations

import itertools
import warnings
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import (ConvergenceFailure, EmptyFeasibleGrid, InfeasibleCBF,
                     NearDegenerateEigenvalues)
from .numerics import spd_cholesky, spd_inverse, sym_eig, symmetrize
from .observer import ObserverConfig, confidence_rate
from .safety import SafetySpec, StabilitySpec, cbf_row, clf_row
from .systems import SystemModel

_GAP_TOL = 1e-6
_MAX_CUTS = 50
_EIGEN_GAP_TOL = 1e-8
_FEAS_TOL = 1e-9
_DUAL_TOL = 1e-9


class ConfidenceMetric(Enum):
    MIN_EIGENVALUE = "min_eigenvalue"
    TRACE = "trace"
    LOG_DETERMINANT = "log_determinant"


@dataclass(frozen=True)
class SolverWeights:
    """c1 weights the confidence term, c2 the stability relaxation penalty,
    dt_ctrl is the prediction horizon of the confidence term."""

    c1: float
    c2: float
    dt_ctrl: float

    def __post_init__(self):
        if self.c1 < 0.0:
            raise ValueError("c1 must be nonnegative")
        if self.c2 <= 0.0:
            raise ValueError("c2 must be positive")
        if self.dt_ctrl <= 0.0:
            raise ValueError("dt_ctrl must be positive")


@dataclass(frozen=True)
class SolverResult:
    u: np.ndarray
    delta: float
    objective: float
    metric_value: float
    iterations: int
    cuts: int
    status: str
    gap: float
    degenerate_eigengap: bool


def _metric_value_gradient(S_pred: np.ndarray, dS_du: np.ndarray,
                           metric: ConfidenceMetric
                           ) -> tuple[float, np.ndarray, bool]:
    dS_du = np.asarray(dS_du, dtype=np.float64)
    n_u = dS_du.shape[0]
    grad = np.zeros(n_u)
    degenerate = False
    if metric is ConfidenceMetric.MIN_EIGENVALUE:
        values, vectors = sym_eig(S_pred)
        v1 = vectors[:, 0]
        value = float(values[0])
        if values.size > 1 and float(values[1] - values[0]) < _EIGEN_GAP_TOL:
            # Repeated smallest eigenvalue: v1^T dS v1 is only a supergradient.
            degenerate = True
        for k in range(n_u):
            grad[k] = float(v1 @ dS_du[k] @ v1)
    elif metric is ConfidenceMetric.TRACE:
        value = float(np.trace(S_pred))
        for k in range(n_u):
            grad[k] = float(np.trace(dS_du[k]))
    elif metric is ConfidenceMetric.LOG_DETERMINANT:
        lower = spd_cholesky(S_pred)
        value = 2.0 * float(np.sum(np.log(np.diag(lower))))
        s_inv = spd_inverse(S_pred)
        for k in range(n_u):
            grad[k] = float(np.trace(s_inv @ dS_du[k]))
    else:
        raise ValueError(f"unknown confidence metric {metric!r}")
    return value, grad, degenerate


def metric_and_gradient(S_pred: np.ndarray, dS_du: np.ndarray,
                        metric: ConfidenceMetric) -> tuple[float, np.ndarray]:
    """Confidence metric value and its gradient in the control.

    dS_du stacks the (constant) partial derivatives of the predicted
    confidence matrix per control coordinate, shape (n_u, n, n).  Warns with
    NearDegenerateEigenvalues when the two smallest eigenvalues are within
    1e-8, in which case the eigenvalue "gradient" is a supergradient.
    """
    value, grad, degenerate = _metric_value_gradient(
        symmetrize(S_pred), dS_du, metric)
    if degenerate:
        warnings.warn("smallest eigenvalues nearly coincide; returning a "
                      "supergradient", NearDegenerateEigenvalues, stacklevel=2)
    return value, grad


def confidence_prediction_family(model: SystemModel, xhat: np.ndarray,
                                 S: np.ndarray, config: ObserverConfig,
                                 dt_ctrl: float
                                 ) -> tuple[np.ndarray, np.ndarray]:
    """Affine representation of the one-step prediction:
    S(t + dt_ctrl)(u) = S_base + sum_k u_k dS_du[k]."""
    xhat = np.asarray(xhat, dtype=np.float64)
    S = symmetrize(S)
    C = model.output_jacobian(xhat)
    drift_A = model.drift_jacobian(xhat)
    s_base = symmetrize(S + dt_ctrl * confidence_rate(
        S, drift_A, C, config.Q, config.R, config.kappa))
    tensor = model.actuation_jacobian(xhat)
    d_slices = np.zeros((model.n_u, model.n_x, model.n_x))
    for k in range(model.n_u):
        g_k = tensor[:, :, k]
        d_slices[k] = -dt_ctrl * (g_k.T @ S + S @ g_k)
    return s_base, d_slices


def _solve_qp_active_set(H: np.ndarray, c: np.ndarray, G: np.ndarray,
                         d: np.ndarray, guess: tuple[int, ...] | None = None
                         ) -> tuple[np.ndarray, tuple[int, ...]] | None:
    """Exact minimizer of 1/2 x^T H x + c^T x subject to G x <= d.

    Candidate active sets are enumerated in ascending size (lexicographic
    within a size); a KKT system is solved for each and the first candidate
    with nonnegative multipliers and full primal feasibility is returned.
    An optional guess (tried first) only shortcuts the search: the minimizer
    is unique for the problems built here.  Returns None when no subset
    qualifies, which for our masters means the constraints are inconsistent.
    """
    n = H.shape[0]
    m = G.shape[0]
    d_tol = _FEAS_TOL * np.maximum(1.0, np.abs(d)) if m else d

    def try_subset(subset: tuple[int, ...]):
        k = len(subset)
        if k == 0:
            try:
                x = np.linalg.solve(H, -c)
            except np.linalg.LinAlgError:
                return None
            lam = np.zeros(0)
        else:
            g_a = G[list(subset)]
            kkt = np.zeros((n + k, n + k))
            kkt[:n, :n] = H
            kkt[:n, n:] = g_a.T
            kkt[n:, :n] = g_a
            rhs = np.concatenate([-c, d[list(subset)]])
            try:
                sol = np.linalg.solve(kkt, rhs)
            except np.linalg.LinAlgError:
                return None
            if not np.all(np.isfinite(sol)):
                return None
            # Guard against LU quietly succeeding on a near-singular system.
            if np.max(np.abs(kkt @ sol - rhs)) > 1e-8 * max(1.0, np.max(np.abs(rhs))):
                return None
            x = sol[:n]
            lam = sol[n:]
        if lam.size and np.min(lam) < -_DUAL_TOL * max(1.0, float(np.max(np.abs(lam)))):
            return None
        if m and np.any(G @ x - d > d_tol):
            return None
        return x, subset

    if guess is not None and len(guess) <= n:
        found = try_subset(tuple(sorted(guess)))
        if found is not None:
            return found
    for size in range(0, n + 1):
        for subset in itertools.combinations(range(m), size):
            found = try_subset(subset)
            if found is not None:
                return found
    return None


def _check_cbf_feasible(a: np.ndarray, b: float, control_box: np.ndarray) -> None:
    lowest = float(np.sum(np.where(a > 0.0, a * control_box[:, 0],
                                   a * control_box[:, 1])))
    if lowest > b + 1e-12:
        raise InfeasibleCBF(
            f"safety row is infeasible over the control box "
            f"(min a.u = {lowest:.6g} > b = {b:.6g})")


@dataclass
class _MasterProblem:
    """Shared assembly for both programs.

    Variable layout: (u[0..n_u-1], delta?, s?); delta is present only for the
    stabilizing program, s only when c1 > 0.
    """

    n_u: int
    u_target: np.ndarray
    c2: float | None
    c1: float
    clf: tuple[np.ndarray, float] | None
    cbf: tuple[np.ndarray, float]
    control_box: np.ndarray

    def __post_init__(self):
        self.has_delta = self.clf is not None
        self.has_s = self.c1 > 0.0
        self.n_vars = self.n_u + int(self.has_delta) + int(self.has_s)
        self.delta_idx = self.n_u if self.has_delta else None
        self.s_idx = self.n_vars - 1 if self.has_s else None
        diag = [1.0] * self.n_u
        if self.has_delta:
            diag.append(self.c2)
        if self.has_s:
            diag.append(0.0)
        self.H = 2.0 * np.diag(diag)
        self.c = np.zeros(self.n_vars)
        self.c[:self.n_u] = -2.0 * self.u_target
        if self.has_s:
            self.c[self.s_idx] = -self.c1
        self.const = float(self.u_target @ self.u_target)
        rows = []
        rhs = []
        if self.clf is not None:
            a, b = self.clf
            row = np.zeros(self.n_vars)
            row[:self.n_u] = a
            row[self.delta_idx] = -1.0
            rows.append(row)
            rhs.append(b)
        a, b = self.cbf
        row = np.zeros(self.n_vars)
        row[:self.n_u] = a
        rows.append(row)
        rhs.append(b)
        for k in range(self.n_u):
            hi = np.zeros(self.n_vars)
            hi[k] = 1.0
            rows.append(hi)
            rhs.append(float(self.control_box[k, 1]))
            lo = np.zeros(self.n_vars)
            lo[k] = -1.0
            rows.append(lo)
            rhs.append(-float(self.control_box[k, 0]))
        self.base_rows = np.array(rows)
        self.base_rhs = np.array(rhs)

    def solve(self, cuts: list[tuple[float, np.ndarray, np.ndarray]],
              guess: tuple[int, ...] | None):
        rows = self.base_rows
        rhs = self.base_rhs
        if self.has_s:
            if cuts:
                cut_rows = np.zeros((len(cuts), self.n_vars))
                cut_rhs = np.zeros(len(cuts))
                for j, (value, grad, point) in enumerate(cuts):
                    # s <= value + grad . (u - point)
                    cut_rows[j, :self.n_u] = -grad
                    cut_rows[j, self.s_idx] = 1.0
                    cut_rhs[j] = value - float(grad @ point)
                rows = np.vstack([rows, cut_rows])
                rhs = np.concatenate([rhs, cut_rhs])
            else:
                raise ValueError("epigraph master requires at least one cut")
        found = _solve_qp_active_set(self.H, self.c, rows, rhs, guess)
        if found is None:
            raise ConvergenceFailure("active-set enumeration found no optimum")
        x, active = found
        objective = 0.5 * float(x @ self.H @ x) + float(self.c @ x) + self.const
        residual = float(np.max(rows @ x - rhs)) if rows.size else 0.0
        return x, objective, active, residual

    def true_objective(self, u: np.ndarray, delta: float, metric_value: float) -> float:
        value = float(np.sum((u - self.u_target) ** 2)) - self.c1 * metric_value
        if self.has_delta:
            value += self.c2 * delta * delta
        return value


def _solve_program(master: _MasterProblem, s_base: np.ndarray,
                   d_slices: np.ndarray, metric: ConfidenceMetric,
                   weights: SolverWeights) -> SolverResult:
    _check_cbf_feasible(master.cbf[0], master.cbf[1], master.control_box)
    n_u = master.n_u

    def metric_at(u: np.ndarray) -> tuple[float, np.ndarray, bool]:
        s_pred = s_base.copy()
        for k in range(n_u):
            s_pred += u[k] * d_slices[k]
        return _metric_value_gradient(symmetrize(s_pred), d_slices, metric)

    if not master.has_s:
        x, _, _, _ = master.solve([], None)
        u = x[:n_u]
        delta = float(x[master.delta_idx]) if master.has_delta else 0.0
        value, _, degenerate = metric_at(u)
        return SolverResult(u=u, delta=delta,
                            objective=master.true_objective(u, delta, value),
                            metric_value=value, iterations=1, cuts=0,
                            status="optimal", gap=0.0,
                            degenerate_eigengap=degenerate)

    # Anchor the cut collection at the c1 = 0 optimum.
    anchor = _MasterProblem(n_u=n_u, u_target=master.u_target, c2=master.c2,
                            c1=0.0, clf=master.clf, cbf=master.cbf,
                            control_box=master.control_box)
    x0, _, _, _ = anchor.solve([], None)
    u_j = x0[:n_u]

    cuts: list[tuple[float, np.ndarray, np.ndarray]] = []
    degenerate_seen = False
    best: tuple[float, np.ndarray, float, float] | None = None
    iterations = 0
    status = "max_iter"
    gap = np.inf
    active_guess: tuple[int, ...] | None = None
    for _ in range(_MAX_CUTS):
        value_j, grad_j, degenerate = metric_at(u_j)
        degenerate_seen = degenerate_seen or degenerate
        cuts.append((value_j, grad_j, u_j.copy()))
        x, master_obj, active, _ = master.solve(cuts, active_guess)
        active_guess = active
        iterations += 1
        u_j = x[:n_u]
        delta_j = float(x[master.delta_idx]) if master.has_delta else 0.0
        value_next, _, degenerate = metric_at(u_j)
        degenerate_seen = degenerate_seen or degenerate
        true_obj = master.true_objective(u_j, delta_j, value_next)
        if best is None or true_obj < best[0]:
            best = (true_obj, u_j.copy(), delta_j, value_next)
        gap = best[0] - master_obj
        if gap <= _GAP_TOL:
            status = "optimal"
            break
    assert best is not None
    return SolverResult(u=best[1], delta=best[2], objective=best[0],
                        metric_value=best[3], iterations=iterations,
                        cuts=len(cuts), status=status, gap=float(gap),
                        degenerate_eigengap=degenerate_seen)


def solve_clf_cbf(model: SystemModel, stability: StabilitySpec,
                  safety: SafetySpec, xhat: np.ndarray, z: np.ndarray,
                  S: np.ndarray, config: ObserverConfig,
                  weights: SolverWeights, control_box: np.ndarray,
                  metric: ConfidenceMetric = ConfidenceMetric.MIN_EIGENVALUE
                  ) -> SolverResult:
    """Joint stabilize-and-stay-safe program with a soft stability row.

    Raises InfeasibleCBF when the hard safety row excludes the whole control
    box.  With c1 = 0 this is a plain QP (no cutting planes).
    """
    xhat = np.asarray(xhat, dtype=np.float64)
    control_box = np.asarray(control_box, dtype=np.float64)
    master = _MasterProblem(
        n_u=model.n_u, u_target=np.zeros(model.n_u), c2=weights.c2,
        c1=weights.c1, clf=clf_row(stability, model, xhat),
        cbf=cbf_row(safety, model, xhat, z, S, config.R),
        control_box=control_box)
    s_base, d_slices = confidence_prediction_family(
        model, xhat, S, config, weights.dt_ctrl)
    return _solve_program(master, s_base, d_slices, metric, weights)


def solve_tracking(model: SystemModel, safety: SafetySpec, xhat: np.ndarray,
                   z: np.ndarray, S: np.ndarray, config: ObserverConfig,
                   weights: SolverWeights, control_box: np.ndarray,
                   u_nominal: np.ndarray,
                   metric: ConfidenceMetric = ConfidenceMetric.MIN_EIGENVALUE
                   ) -> SolverResult:
    """Track a nominal control as closely as safety and confidence allow."""
    xhat = np.asarray(xhat, dtype=np.float64)
    control_box = np.asarray(control_box, dtype=np.float64)
    u_nominal = np.asarray(u_nominal, dtype=np.float64)
    master = _MasterProblem(
        n_u=model.n_u, u_target=u_nominal, c2=None, c1=weights.c1,
        clf=None, cbf=cbf_row(safety, model, xhat, z, S, config.R),
        control_box=control_box)
    s_base, d_slices = confidence_prediction_family(
        model, xhat, S, config, weights.dt_ctrl)
    return _solve_program(master, s_base, d_slices, metric, weights)


def grid_oracle(objective, constraints, boxes: np.ndarray,
                resolution) -> tuple[np.ndarray, float]:
    """Exhaustive minimum of an objective over a boxed grid with linear cuts.

    constraints is a sequence of (a, b) rows meaning a . x <= b.  The
    objective may be batch-aware (called once with an (N, d) array) or a plain
    scalar function; both are accepted.  Returns (best point, best value).
    Raises EmptyFeasibleGrid when no grid point is feasible; resolutions below
    101 per axis are rejected as too coarse to be a useful reference.
    """
    boxes = np.asarray(boxes, dtype=np.float64)
    dims = boxes.shape[0]
    if np.isscalar(resolution):
        resolution = [int(resolution)] * dims
    resolution = [int(r) for r in resolution]
    if any(r < 101 for r in resolution):
        raise ValueError("grid resolution must be at least 101 per axis")
    axes = [np.linspace(boxes[i, 0], boxes[i, 1], resolution[i])
            for i in range(dims)]
    mesh = np.meshgrid(*axes, indexing="ij")
    points = np.stack([m.reshape(-1) for m in mesh], axis=1)
    mask = np.ones(points.shape[0], dtype=bool)
    for a, b in constraints:
        a = np.asarray(a, dtype=np.float64)
        mask &= points @ a <= b + 1e-12
    if not np.any(mask):
        raise EmptyFeasibleGrid("no grid point satisfies the constraint rows")
    feasible = points[mask]
    values = None
    try:
        values = np.asarray(objective(feasible), dtype=np.float64)
        if values.shape != (feasible.shape[0],):
            values = None
    except Exception:
        values = None
    if values is None:
        values = np.array([float(objective(p)) for p in feasible])
    best = int(np.argmin(values))
    return feasible[best].copy(), float(values[best])
