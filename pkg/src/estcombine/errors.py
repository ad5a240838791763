"""Exception types raised by estcombine."""


class EstCombineError(Exception):
    """Base class for all library errors."""


class InvalidArgument(EstCombineError, ValueError):
    """An argument violates an operation's precondition."""


class DegenerateWeights(EstCombineError, ValueError):
    """Weights cannot be normalized because they sum to zero."""


class SupportViolation(EstCombineError, RuntimeError):
    """A proposal assigned zero density to a point where f*p is nonzero."""


class DegenerateSample(EstCombineError, RuntimeError):
    """Every importance weight in a sample is zero."""
