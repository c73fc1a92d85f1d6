"""Exception hierarchy for hzreach."""


class HZError(Exception):
    """Base class for all hzreach errors."""


class DimensionMismatch(HZError, ValueError):
    pass


class NonFiniteEntry(HZError, ValueError):
    pass


class UnsortedBreakpoints(HZError, ValueError):
    pass


class TooFewVertices(HZError, ValueError):
    pass


class EvaluationFailure(HZError, RuntimeError):
    pass


class NegativeDelta(HZError, ValueError):
    pass


class DomainNotCovered(HZError, ValueError):
    """A nonlinear term's argument range leaves the domain of its enclosure."""


class NonScalarArgument(HZError, ValueError):
    pass


class DomainViolation(HZError):
    """An argument set is not (provably) inside the domain of a state-update set.

    ``step`` is the reach step index at which the check failed, when known.
    """

    def __init__(self, message, step=None, hull=None):
        super().__init__(message)
        self.step = step
        self.hull = hull


class NumericalFailure(HZError, ArithmeticError):
    pass


class Indeterminate(HZError):
    """A query hit its node limit before reaching a proof either way."""


class CapExceeded(HZError):
    """Leaf enumeration stopped early; ``lower_bound`` leaves were found."""

    def __init__(self, message, lower_bound):
        super().__init__(message)
        self.lower_bound = lower_bound


class ConfigError(HZError, ValueError):
    pass
