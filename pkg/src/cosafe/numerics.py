"""Dense numerical kernels: fixed-step RK4, symmetric eigensolver, SPD
factorization and inversion, finite-difference gradients.

Everything here operates on small matrices (state dimensions of a handful),
so the routines favor robustness and exact error semantics over asymptotic
speed.  Eigenvalues come from a cyclic Jacobi sweep, and definiteness is
decided by Cholesky pivots, so a failure always names the offending quantity
instead of surfacing as a downstream NaN.
"""

from __future__ import annotations

import math
from typing import Callable, NamedTuple

import numpy as np

from .errors import ConvergenceFailure, NonFiniteDerivative, NotPositiveDefinite

# Relative off-diagonal mass below which the Jacobi iteration is converged.
_JACOBI_TOL = 1e-14
_JACOBI_MAX_SWEEPS = 100

# Cholesky pivots are compared against this fraction of the diagonal scale.
_PIVOT_RTOL = 1e-12


class SpectralDecomposition(NamedTuple):
    """Eigenvalues ascending, eigenvectors as matching orthonormal columns."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray


def symmetrize(a: np.ndarray) -> np.ndarray:
    """Return (A + A^T)/2; cheap insurance after products of symmetric terms."""
    a = np.asarray(a, dtype=np.float64)
    return 0.5 * (a + a.T)


def rk4_step(rhs: Callable[[float, np.ndarray], np.ndarray], t: float,
             y: np.ndarray, dt: float) -> np.ndarray:
    """One classical Runge-Kutta step of size dt for y' = rhs(t, y).

    Raises NonFiniteDerivative if any stage evaluates to NaN/Inf, so a blown-up
    trajectory fails loudly at the step that produced it.
    """
    y = np.asarray(y, dtype=np.float64)
    k1 = np.asarray(rhs(t, y), dtype=np.float64)
    k2 = np.asarray(rhs(t + 0.5 * dt, y + 0.5 * dt * k1), dtype=np.float64)
    k3 = np.asarray(rhs(t + 0.5 * dt, y + 0.5 * dt * k2), dtype=np.float64)
    k4 = np.asarray(rhs(t + dt, y + dt * k3), dtype=np.float64)
    if not (np.all(np.isfinite(k1)) and np.all(np.isfinite(k2))
            and np.all(np.isfinite(k3)) and np.all(np.isfinite(k4))):
        raise NonFiniteDerivative(
            f"non-finite derivative in RK4 stage at t={t!r}")
    return y + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def _off_diagonal_norm(a: np.ndarray) -> float:
    mask = ~np.eye(a.shape[0], dtype=bool)
    return float(np.sqrt(np.sum(a[mask] ** 2)))


def sym_eig(matrix: np.ndarray,
            max_sweeps: int = _JACOBI_MAX_SWEEPS) -> SpectralDecomposition:
    """Full eigendecomposition of a symmetric matrix by cyclic Jacobi sweeps.

    The input is symmetrized first, so slightly asymmetric products are
    accepted.  Rotations sweep the strict upper triangle row by row; the
    method is unconditionally stable for symmetric input and converges
    quadratically once the off-diagonal mass is small.

    Returns eigenvalues in ascending order with eigenvector columns in the
    matching order.  Raises ConvergenceFailure if 100 sweeps do not reduce the
    off-diagonal mass below 1e-14 relative to the Frobenius norm.
    """
    a = symmetrize(matrix).copy()
    n = a.shape[0]
    if a.shape != (n, n):
        raise ValueError("sym_eig expects a square matrix")
    v = np.eye(n)
    if n == 1:
        return SpectralDecomposition(a[0, :].copy(), v)

    scale = max(1.0, float(np.sqrt(np.sum(a * a))))
    converged = False
    for _ in range(max_sweeps):
        if _off_diagonal_norm(a) <= _JACOBI_TOL * scale:
            converged = True
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if abs(apq) <= 1e-300:
                    continue
                # Angle that zeroes the (p, q) entry of the rotated matrix.
                phi = 0.5 * math.atan2(2.0 * apq, a[q, q] - a[p, p])
                c = math.cos(phi)
                s = math.sin(phi)
                col_p = a[:, p].copy()
                col_q = a[:, q].copy()
                a[:, p] = c * col_p - s * col_q
                a[:, q] = s * col_p + c * col_q
                row_p = a[p, :].copy()
                row_q = a[q, :].copy()
                a[p, :] = c * row_p - s * row_q
                a[q, :] = s * row_p + c * row_q
                a[p, q] = 0.0
                a[q, p] = 0.0
                vcol_p = v[:, p].copy()
                vcol_q = v[:, q].copy()
                v[:, p] = c * vcol_p - s * vcol_q
                v[:, q] = s * vcol_p + c * vcol_q
    else:
        converged = _off_diagonal_norm(a) <= _JACOBI_TOL * scale
    if not converged:
        raise ConvergenceFailure(
            f"Jacobi eigensolver did not converge in {max_sweeps} sweeps")

    values = np.diag(a).copy()
    order = np.argsort(values, kind="stable")
    return SpectralDecomposition(values[order], v[:, order])


def spd_cholesky(a: np.ndarray) -> np.ndarray:
    """Lower-triangular Cholesky factor of a symmetric positive definite matrix.

    Raises NotPositiveDefinite when a pivot falls at or below 1e-12 times the
    diagonal scale, which is the definiteness test used throughout the package.
    """
    a = symmetrize(a)
    n = a.shape[0]
    scale = float(np.max(np.abs(np.diag(a)))) if n else 0.0
    tol = _PIVOT_RTOL * max(scale, 1e-300)
    lower = np.zeros_like(a)
    for j in range(n):
        pivot = a[j, j] - float(lower[j, :j] @ lower[j, :j])
        if pivot <= tol:
            raise NotPositiveDefinite(
                f"pivot {pivot:.3e} at index {j} is at or below tolerance {tol:.3e}")
        lower[j, j] = math.sqrt(pivot)
        if j + 1 < n:
            lower[j + 1:, j] = (a[j + 1:, j] - lower[j + 1:, :j] @ lower[j, :j]) / lower[j, j]
    return lower


def is_positive_definite(a: np.ndarray) -> bool:
    try:
        spd_cholesky(a)
    except NotPositiveDefinite:
        return False
    return True


def spd_inverse(p: np.ndarray) -> np.ndarray:
    """Inverse of a symmetric positive definite matrix via its Cholesky factor.

    The result is symmetrized before returning.  Raises NotPositiveDefinite
    for indefinite input (same pivot rule as spd_cholesky).
    """
    p = np.asarray(p, dtype=np.float64)
    lower = spd_cholesky(p)
    n = p.shape[0]
    eye = np.eye(n)
    # Solve L y = I, then L^T x = y; triangular back-substitution per column.
    y = np.zeros((n, n))
    for j in range(n):
        col = eye[:, j].copy()
        for i in range(n):
            col[i] = (col[i] - lower[i, :i] @ col[:i]) / lower[i, i]
        y[:, j] = col
    upper = lower.T
    x = np.zeros((n, n))
    for j in range(n):
        col = y[:, j].copy()
        for i in range(n - 1, -1, -1):
            col[i] = (col[i] - upper[i, i + 1:] @ col[i + 1:]) / upper[i, i]
        x[:, j] = col
    return symmetrize(x)


def finite_diff_gradient(fn: Callable[[np.ndarray], float], x: np.ndarray,
                         h: float = 1e-6) -> np.ndarray:
    """Central-difference gradient of a scalar function, O(h^2) accurate."""
    x = np.asarray(x, dtype=np.float64)
    grad = np.zeros_like(x)
    for k in range(x.size):
        step = np.zeros_like(x)
        step[k] = h
        grad[k] = (fn(x + step) - fn(x - step)) / (2.0 * h)
    return grad
