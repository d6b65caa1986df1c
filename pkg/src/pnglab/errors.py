"""Exception types shared across the package."""


class DominationError(ValueError):
    """Raised when a query pair is not ordered by weak domination."""


class TruncationError(RuntimeError):
    """Raised when a quantity depends on configuration outside the sampled window."""


class NoSinkExitError(RuntimeError):
    """Raised when a second-class particle cannot be activated."""


class RecordError(ValueError):
    """Raised when a persisted experiment record cannot be read."""
