"""Errors raised by the toolkit.

Every failure the services can signal has its own class so callers (the CLI,
the HTTP routers, the experiment runner) can react to the kind of failure
rather than parse messages.
"""


class ArfimaError(Exception):
    """Base class for all toolkit errors."""


class SpecError(ArfimaError, ValueError):
    """An ARFIMA specification violates its invariants."""


class NonStationary(SpecError):
    pass


class NonInvertible(SpecError):
    pass


class CommonRoot(SpecError):
    pass


class DOutOfRange(SpecError):
    pass


class LambdaOutOfRange(ArfimaError, ValueError):
    pass


class CholeskyFailure(ArfimaError):
    pass


class NonPositiveDefinite(ArfimaError):
    pass


class NoConvergence(ArfimaError):
    pass


class DStarOutOfRange(ArfimaError, ValueError):
    pass


class NoRoot(ArfimaError):
    """No unique interior pseudo-true root was found."""

    def __init__(self, message: str, roots=None):
        super().__init__(message)
        self.roots = roots or []


class BoundaryRoot(ArfimaError):
    pass


class QuadratureFailure(ArfimaError):
    pass


class UnsupportedN(ArfimaError, ValueError):
    pass


class SingularB(ArfimaError):
    pass


class DegenerateSample(ArfimaError, ValueError):
    pass


class CaseMismatch(ArfimaError, ValueError):
    pass


class ExperimentFailure(ArfimaError):
    pass


class IoError(ArfimaError, OSError):
    pass


class RepeatedArRoots(UserWarning):
    """AR roots too close for the partial-fraction autocovariance."""
