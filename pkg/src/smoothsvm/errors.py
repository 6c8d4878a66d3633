"""Exception types shared across the package."""


class SmoothSvmError(Exception):
    """Base class for all errors raised by this package."""


class NonDifferentiable(SmoothSvmError):
    """A derivative was requested where the loss has none (e.g. the hinge)."""


class OutOfDomain(SmoothSvmError):
    """Conjugate argument outside the open domain interval."""


class Unsupported(SmoothSvmError):
    """Operation not defined for this loss family."""


class InvalidGenerator(SmoothSvmError):
    """Generator pair violates the defining identity or monotonicity."""


class DimensionMismatch(SmoothSvmError):
    """Vector/matrix dimensions do not line up."""


class NumericalBreakdown(SmoothSvmError):
    """Internal numerical invariant violated (e.g. nonpositive curvature in CG)."""


class WrongLoss(SmoothSvmError):
    """Solver invoked with a loss family it does not support."""


class TooFewInstances(SmoothSvmError):
    """Dataset too small for the requested split."""


class ParseError(SmoothSvmError):
    """Malformed input file; carries the 1-based line number."""

    def __init__(self, line_number: int, message: str):
        self.line_number = line_number
        super().__init__(f"line {line_number}: {message}")
