"""Exception types raised by the detection library.

All of them derive from ``ValueError`` so callers that only care about
"bad input" can catch that.
"""


class DomainError(ValueError):
    """An observation lies outside the support required by an operation."""


class InvalidPfaError(ValueError):
    """A false-alarm probability lies outside the range a detector accepts."""


class InvalidParametersError(ValueError):
    """Distribution or detector parameters violate a precondition."""


class DegenerateSampleError(ValueError):
    """The data carry no information for estimation (e.g. all values equal)."""


class SpecMismatchError(ValueError):
    """Detector configuration and the supplied data disagree."""


class WindowTooLargeError(ValueError):
    """A range profile is too short for the requested window geometry."""
