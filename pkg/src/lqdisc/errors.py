"""Exception hierarchy for lqdisc.

Every error raised by the library derives from :class:`LqdiscError` so
callers (notably the CLI) can map failures to a small set of outcomes.
"""


class LqdiscError(Exception):
    """Base class for all lqdisc errors."""


class ValidationError(LqdiscError):
    """A model or argument failed validation."""


class SingularMatrixError(LqdiscError):
    """A linear solve hit a numerically singular pivot."""


class DivergenceError(LqdiscError):
    """An iteration produced non-finite values."""


class ConvexityError(LqdiscError):
    """A Riccati step lost positive definiteness of the input block."""


class ResourceLimitError(LqdiscError):
    """A request exceeded a configured size cap."""
