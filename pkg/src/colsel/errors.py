"""Exception types shared across the package."""


class ColselError(Exception):
    """Base class for all package-specific errors."""


class InvalidInputError(ColselError, ValueError):
    """Input data violates a documented precondition (non-finite entries, zero columns)."""


class InvalidParameterError(ColselError, ValueError):
    """A parameter is outside its documented domain (bad Schatten p, unknown kind)."""


class ShapeError(ColselError, ValueError):
    """Matrix dimensions are incompatible with the requested operation."""


class RankDeficiencyError(ColselError, ValueError):
    """The operation requires full column rank and the input does not have it."""


class InfeasibleError(ColselError, RuntimeError):
    """No column subset satisfies the structural requirements of the selection problem."""


class CapacityError(ColselError, ValueError):
    """An instance generator cannot place the requested number of distinct sets."""


class GenerationFailureError(ColselError, RuntimeError):
    """A randomized generator exhausted its sampling budget."""


class PreconditionError(ColselError, ValueError):
    """A documented operation precondition does not hold for the given input."""


class ParseError(ColselError, ValueError):
    """Text input could not be parsed; carries the offending line number when known."""

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line
