"""Error types shared across the package."""


class CosafeError(Exception):
    """Base class for all package-specific failures."""


class NonFiniteDerivative(CosafeError):
    """An ODE right-hand side produced NaN or Inf at an integration stage."""


class ConvergenceFailure(CosafeError):
    """An iterative numerical routine exhausted its iteration budget."""


class NotPositiveDefinite(CosafeError):
    """A matrix required to be symmetric positive definite is not."""


class InfeasibleCBF(CosafeError):
    """The safety constraint row admits no control inside the control box."""


class EmptyFeasibleGrid(CosafeError):
    """No grid point satisfies the constraint rows."""


class ConfigError(CosafeError):
    """A run configuration is malformed or contains unknown keys."""


class NearDegenerateEigenvalues(UserWarning):
    """Smallest eigenvalues nearly coincide; the eigenvalue gradient is a
    supergradient rather than a derivative."""
