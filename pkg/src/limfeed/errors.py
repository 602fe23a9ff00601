"""Exception types raised by the library."""


class LimfeedError(Exception):
    """Base class for all library errors."""


class InvalidInputError(LimfeedError, ValueError):
    """An argument violates a documented precondition."""


class EmptyNullSpaceError(InvalidInputError):
    """A null-space basis was requested for a square unitary matrix."""


class InvalidStatisticsError(InvalidInputError):
    """Channel statistics are inconsistent (e.g. mismatched traces)."""


class DegenerateStatisticsError(InvalidInputError):
    """Statistics carry no power where the construction needs some."""


class InfeasiblePlanError(InvalidInputError):
    """A codebook plan cannot fit the requested number of feedback bits."""
