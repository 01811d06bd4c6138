"""Shared exception types."""


class DomainError(ValueError):
    """Argument outside the mathematical domain of an operation."""


class ConfigError(ValueError):
    """Invalid geometry or run configuration."""


class NonConvergenceError(RuntimeError):
    """A quadrature, series or iterative solve failed to converge."""


class TruncationError(RuntimeError):
    """A mode-sum truncation tail exceeds the requested tolerance."""


class SingularSystemError(RuntimeError):
    """A discrete solve hit a (numerically) singular system."""
