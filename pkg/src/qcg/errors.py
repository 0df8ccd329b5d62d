"""Exception types shared across the package."""


class QcgError(Exception):
    """Base class for all package errors."""


class DomainError(QcgError, ValueError):
    """A parameter lies outside its mathematically valid range."""


class ResourceError(QcgError):
    """A construction exceeds a configured resource cap (e.g. polynomial degree).

    When raised by a polynomial builder, the ``report`` attribute carries the
    DegreeReport so degree bookkeeping stays available without materializing
    coefficients.
    """

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


class NotConverged(QcgError):
    """An iterative procedure failed to reach its tolerance.

    Carries ``best`` (the best iterate found) and ``residual``.
    """

    def __init__(self, message, best=None, residual=None):
        super().__init__(message)
        self.best = best
        self.residual = residual


class ConditionViolation(QcgError, ValueError):
    """A polynomial violates the |P(x)| <= 1 requirement on [-1, 1]."""


class ParityMismatch(QcgError, ValueError):
    """Phase factors or polynomial do not have the required definite parity."""


class DimensionMismatch(QcgError, ValueError):
    """Operands act on incompatible spaces."""


class NormError(QcgError, ValueError):
    """A matrix norm bound required by a construction does not hold."""


class NormalizationError(QcgError, ValueError):
    """A normalization constant vanished (identically zero polynomial)."""


class ZeroVector(QcgError, ValueError):
    """A vector that must be nonzero is zero."""


class NotPositiveDefinite(QcgError, ValueError):
    """The matrix is not positive definite where positive definiteness is required."""


class MaxIterExceeded(QcgError):
    """The iteration cap was reached before convergence. Carries ``trace``."""

    def __init__(self, message, trace=None):
        super().__init__(message)
        self.trace = trace


class PrecisionFailure(QcgError):
    """A shot-noise estimate is unusable (e.g. a non-positive denominator)."""


class InsufficientData(QcgError, ValueError):
    """Not enough data points for a requested fit."""
