"""
Exception hierarchy for the simulator.
"""


class VneSimError(Exception):
    """Base class for every error raised by vnesim."""


class OverlapError(VneSimError):
    """A placement covers a resource block that is already occupied."""


class OutOfBoundsError(VneSimError):
    """A placement reaches outside the substrate."""


class UnknownNetworkError(VneSimError):
    """The network owns no cell of the grid."""


class RegionTooSmallError(VneSimError):
    """A vacant region cannot hold the requested rectangle."""


class InvalidStateError(VneSimError):
    """Inputs violate a state invariant (overlapping or oversized existing networks)."""


class InfeasibleError(VneSimError):
    """The existing networks cannot all be embedded."""


class ConfigError(VneSimError):
    """Invalid scenario or traffic configuration."""


class ParseError(VneSimError):
    """Malformed trace or summary file."""

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class CombinationExplosion(Exception):
    """
    Signal (not a failure): too many requests at one priority level to
    enumerate every combination.
    """

    def __init__(self, count, cap):
        self.count = count
        self.cap = cap
        super().__init__(f"{count} requests exceed the combination cap of {cap}")
