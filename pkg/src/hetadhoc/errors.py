"""Exception and warning types shared across the package."""


class HetAdHocError(Exception):
    """Base class for all package errors."""


class DomainError(HetAdHocError, ValueError):
    """An argument lies outside the mathematical domain of a function."""


class DivergenceError(HetAdHocError, ArithmeticError):
    """A required moment or integral is infinite."""


class ConvergenceError(HetAdHocError, ArithmeticError):
    """A numerical procedure failed to converge.

    ``partial`` carries the best estimate available when the procedure stopped.
    """

    def __init__(self, message: str, partial: float | None = None):
        super().__init__(message)
        self.partial = partial


class AccuracyError(HetAdHocError, ArithmeticError):
    """Two independent numerical evaluations disagree beyond tolerance."""

    def __init__(self, message: str, values: tuple[float, ...] = ()):
        super().__init__(message)
        self.values = values


class CapabilityError(HetAdHocError, NotImplementedError):
    """The request is outside what an operation supports."""


class QualityWarning(UserWarning):
    """An approximation is used outside the regime where it is accurate."""


class TruncationWarning(UserWarning):
    """A truncated evaluation is sensitive to its truncation point."""


class DivergenceWarning(UserWarning):
    """A quantity diverges and a limiting value was returned instead."""
