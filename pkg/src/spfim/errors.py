"""Exception types raised across the package."""


class SpfimError(Exception):
    """Base class for all package errors."""


class DimensionError(SpfimError, ValueError):
    pass


class ValidationError(SpfimError, ValueError):
    pass


class NotPositiveDefiniteError(SpfimError, ValueError):
    """A matrix that must be SPD is not.

    ``index`` optionally locates the offending matrix inside a batch.
    """

    def __init__(self, message, index=None):
        super().__init__(message)
        self.index = index


class OracleError(SpfimError, RuntimeError):
    pass


class ReplicateError(SpfimError, RuntimeError):
    """A Monte Carlo replicate failed; ``outer`` and ``inner`` locate it."""

    def __init__(self, message, outer=None, inner=None):
        super().__init__(message)
        self.outer = outer
        self.inner = inner


class ConfigError(SpfimError, ValueError):
    pass
