"""Exception types raised across the package."""


class PolyrepError(Exception):
    """Base class for all package errors."""


class MismatchedSpace(PolyrepError, ValueError):
    pass


class OutOfSpace(PolyrepError, ValueError):
    pass


class InvalidMeasure(PolyrepError, ValueError):
    pass


class AbsoluteContinuityViolated(PolyrepError, ValueError):
    """The target has an atom where the compared state has (numerically) no mass."""


class OffGrid(PolyrepError, ValueError):
    pass


class BoundViolated(PolyrepError, ValueError):
    pass


class StepSizeTooLarge(PolyrepError, ValueError):
    pass


class NotARestPoint(PolyrepError, ValueError):
    pass


class InvalidEpsilon(PolyrepError, ValueError):
    pass


class SamplingExhausted(PolyrepError, RuntimeError):
    pass


class MissingDiagnostics(PolyrepError, ValueError):
    pass


class ParseError(PolyrepError, ValueError):
    def __init__(self, field, message=None, line=None):
        self.field = field
        self.line = line
        text = message or f"missing or malformed field {field!r}"
        if line is not None:
            text = f"line {line}: {text}"
        super().__init__(text)


class ValidationError(PolyrepError, ValueError):
    def __init__(self, field, message=None):
        self.field = field
        super().__init__(message or f"invalid value for {field!r}")
