"""Exception types raised by hiclust."""


class HiclustError(Exception):
    """Base class for all library errors."""


class InvalidInputError(HiclustError, ValueError):
    """Arguments or input files violate a documented precondition."""


class InvalidStateError(HiclustError, ValueError):
    """A degree state is not strictly positive or has underflowed."""


class SelectionError(HiclustError):
    """No usable power could be selected from a degree sweep."""


class UndefinedMetricError(HiclustError, ValueError):
    """A quantity is undefined on the given input (empty core set, empty overlap)."""
