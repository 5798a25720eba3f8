"""Exception taxonomy shared by all modules."""


class CCRadonError(Exception):
    """Base class for all package errors."""


class ChartDomainError(CCRadonError):
    """A point lies outside the model's chart domain box."""


class FlowExitError(ChartDomainError):
    """A trajectory left the chart domain; carries the approximate exit time."""

    def __init__(self, message, exit_time):
        super().__init__(message)
        self.exit_time = exit_time


class ResolutionError(CCRadonError):
    """The lattice is too coarse for the requested computation."""


class OrderingError(CCRadonError):
    """Exponent ordering constraint violated (e.g. r < q)."""


class DegenerateError(CCRadonError):
    """Degenerate input: empty set, q <= p, r <= p, and similar."""


class ConfigError(CCRadonError):
    """Inconsistent or unsupported configuration parameters."""
