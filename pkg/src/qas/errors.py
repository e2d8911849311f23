"""Exception types shared across the package."""


class QasError(Exception):
    """Base class for all package-specific errors."""


class MetricConstructionError(QasError):
    """A candidate distance matrix fails a metric axiom."""


class DisconnectedGraphError(QasError):
    """A graph operation requires connectivity and a vertex pair is unreachable."""


class SpectralError(QasError):
    """A matrix fails a spectral requirement (e.g. not positive definite)."""


class ConvergenceError(QasError):
    """An iterative solver exhausted its budget before reaching tolerance."""

    def __init__(self, message: str, residual: float | None = None):
        super().__init__(message)
        self.residual = residual


class SaturationError(QasError):
    """No member of a finite family achieves the requested tolerance."""


class PartError(QasError):
    """A point or measure falls outside the partition part it is required to live in."""


class CoverError(QasError):
    """A user-supplied cover violates its isometry contract."""


class SizeCapError(QasError):
    """An input exceeds the configured desk-scale cap."""
