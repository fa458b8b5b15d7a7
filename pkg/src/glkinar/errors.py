"""Exception hierarchy and warning categories shared across the package."""


class GlkInarError(Exception):
    """Base class for all package errors."""


class DomainError(GlkInarError):
    """An argument lies outside the mathematical domain of an operation."""


class ConfigurationError(GlkInarError):
    """A configuration value (order, window, flag combination) is invalid."""


class NumericalError(GlkInarError):
    """An iterative numerical procedure failed to converge."""


class DataError(GlkInarError):
    """Input data could not be parsed or violates the data contract."""

    def __init__(self, message, line=None):
        if line is not None:
            message = f"{message} (line {line})"
        super().__init__(message)
        self.line = line


class InitializationError(GlkInarError):
    """A sampler could not be started from a valid state."""


class DiagnosticsError(GlkInarError):
    """A diagnostic statistic is undefined for the given chain."""


class TruncationWarning(UserWarning):
    """A probability table was cut off before reaching its mass tolerance."""


class InadmissibleEstimateWarning(UserWarning):
    """A point estimate fell outside the admissible parameter region."""
