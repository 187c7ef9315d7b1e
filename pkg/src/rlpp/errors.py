"""Exception types raised by the solver."""


class RLPPError(Exception):
    """Base class for all errors raised by rlpp."""


class UnreachableNodeError(RLPPError):
    """A passenger endpoint cannot be reached in the road network."""


class SubRouteError(RLPPError, ValueError):
    """A sub-route is not a contiguous range of a line's edges."""


class NotCoveredError(RLPPError, ValueError):
    """A plan assigns a passenger to a line that has no value entry for them."""


class EnumerationLimitError(RLPPError):
    """An exact oracle refused to run because the instance exceeds its limits."""


class InstanceFormatError(RLPPError):
    """An instance or plan file could not be parsed or failed validation."""

    def __init__(self, message, violations=()):
        super().__init__(message)
        self.violations = list(violations)


class ResampleLimitError(RLPPError):
    """A random generator gave up after too many rejected samples."""
