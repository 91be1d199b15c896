"""Exception and warning types shared across the package."""


class LiminfError(Exception):
    """Base class for all library errors."""


class PreconditionError(LiminfError, ValueError):
    """An operation was called with arguments violating its contract."""


class ParamMismatch(PreconditionError):
    """Hypercubes (or a cube and a denominator) are not comparable."""


class DimensionMismatch(ParamMismatch):
    pass


class TauMismatch(ParamMismatch):
    pass


class HypothesisViolation(LiminfError):
    """The dimension formula was evaluated outside the range it is proved for."""


class EmptyRange(PreconditionError):
    """No denominator of the set falls in the requested window."""


class StarvedParent(LiminfError):
    """A Cantor level could not give some parent at least two children."""

    def __init__(self, level, parent_index, children):
        super().__init__(
            f"level {level}: parent {parent_index} received {children} children (need >= 2)"
        )
        self.level = level
        self.parent_index = parent_index
        self.children = children


class InsufficientScales(LiminfError):
    pass


class NotPrime(PreconditionError):
    pass


class InvariantViolation(LiminfError):
    """An internal consistency check failed. Never raised on valid input."""


class InfeasibleShaping(UserWarning):
    """Shaping was requested with an exponent the base set never exceeds."""


class HypothesisWarning(UserWarning):
    """Parameters fall below the range where the construction is guaranteed."""
