"""Exception hierarchy shared by all modules.

Validation failures subclass ``ValueError`` so callers that only care about
bad input can catch the builtin. Solver failures carry whatever best-effort
result was available when they gave up.
"""

from __future__ import annotations


class NeedleError(Exception):
    """Base class for every error raised by this package."""


class ValidationError(NeedleError, ValueError):
    pass


class EndpointNotPinned(ValidationError):
    pass


class OrderViolation(ValidationError):
    def __init__(self, message: str, index: int | None = None):
        super().__init__(message)
        # 1-based position of the first offending coordinate
        self.index = index


class OutOfRange(ValidationError):
    pass


class InvalidCount(ValidationError):
    pass


class IndexOutOfRange(ValidationError, IndexError):
    pass


class DomainViolation(ValidationError):
    pass


class PointOnCharge(DomainViolation):
    pass


class PointOnNeedle(DomainViolation):
    pass


class Endpoint(DomainViolation):
    pass


class NonpositiveArgument(DomainViolation):
    pass


class CountNotDyadic(ValidationError):
    pass


class ResolutionTooCoarse(ValidationError):
    pass


class InsufficientSamples(ValidationError):
    pass


class ConvergenceError(NeedleError):
    """A numerical procedure stopped without meeting its tolerance."""

    def __init__(self, message: str, report=None):
        super().__init__(message)
        self.report = report


class NotConverged(ConvergenceError):
    pass


class StepUnderflow(ConvergenceError):
    pass


class OrderingBreached(ConvergenceError):
    pass
