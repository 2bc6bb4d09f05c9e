"""Exception types shared across the package."""


class DeckmapError(Exception):
    """Base class for all errors raised by this package."""


class InvalidArgument(DeckmapError):
    """A precondition on an operation's arguments was violated."""


class DegreeOverflow(DeckmapError):
    """An iterate or composition would exceed the configured degree cap."""


class NumericFailure(DeckmapError):
    """A numeric kernel failed to converge; carries diagnostics."""

    def __init__(self, message: str, **diagnostics):
        super().__init__(message)
        self.diagnostics = diagnostics


class NotRepresentable(DeckmapError):
    """An exact-mode computation met a value outside Q(i)."""


class SearchFailure(DeckmapError):
    """A deterministic search (base points, candidates) was exhausted."""


class HypothesisViolation(DeckmapError):
    """Input does not have the structure the operation presupposes."""


class NumericFalsePositive(DeckmapError):
    """Numeric candidate filtering let through elements that do not close."""


class ParseError(DeckmapError):
    """Syntax or binding error in a map expression; carries a position."""

    def __init__(self, message: str, position: int):
        super().__init__(f"{message} (at position {position})")
        self.position = position
