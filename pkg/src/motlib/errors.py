"""Exception types shared across the library."""


class DomainError(ValueError):
    """Input is well-formed but violates a mathematical precondition."""


class NotCyclicallyMonotoneError(DomainError):
    """Raised when an operation requires a cyclically monotone pair set.

    Carries the violating cycle (list of pair indices) and its deficit,
    the value of the cyclic sum that should have been nonnegative.
    """

    def __init__(self, message, cycle=None, deficit=None):
        super().__init__(message)
        self.cycle = list(cycle) if cycle is not None else None
        self.deficit = deficit


class StrictConvexityError(DomainError):
    """A receding direction in which the limit range is not strictly convex."""

    def __init__(self, message, direction=None):
        super().__init__(message)
        self.direction = direction


class MarginError(DomainError):
    """Coupling plan margins disagree with the stored marginal measures."""


class InputFormatError(ValueError):
    """Unparseable or ambiguous input file; message names the offending row."""
