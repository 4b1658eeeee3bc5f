"""Exception types shared across the package."""

from __future__ import annotations


class ExpanderError(Exception):
    """Base class for all errors raised by this package."""


class DomainError(ExpanderError, ValueError):
    """Input lies outside the domain of an operation (non-transverse pair, SL case, r <= 0, ...)."""


class InvalidFrameError(DomainError):
    """A tangent frame is not orthonormal or not Lagrangian within tolerance."""


class IntegrationFailure(ExpanderError):
    """The profile integrator stopped early.

    ``partial`` holds the curve computed up to the failure point and
    ``reason`` is a short tag (``"origin"``, ``"curvature"``, ``"step"``).
    """

    def __init__(self, message, partial=None, reason=""):
        super().__init__(message)
        self.partial = partial
        self.reason = reason


class NotFoundError(ExpanderError):
    """The shooting sweep found no sign change; ``trace`` holds the sweep."""

    def __init__(self, message, trace=None):
        super().__init__(message)
        self.trace = trace if trace is not None else []


class InsufficientDataError(ExpanderError):
    """A curve is too short for the requested extrapolation or fit."""


class NumericalDegeneracyError(ExpanderError):
    """A discrete tangent frame collapsed (for instance at r = 0)."""


class AccuracyNotMetError(ExpanderError):
    """Truncation error bound exceeds the requested tolerance."""

    def __init__(self, message, tail_bound=float("nan")):
        super().__init__(message)
        self.tail_bound = tail_bound


class StepRejected(ExpanderError):
    """A flow step violates the explicit stability bound."""


class SingularityError(ExpanderError):
    """The flow reached the origin; ``state`` holds the last good state."""

    def __init__(self, message, state=None):
        super().__init__(message)
        self.state = state


class StepTooLargeError(ExpanderError):
    """A deformation left the graphical regime."""


class ProfileFormatError(ExpanderError):
    """A persisted profile could not be parsed; message carries line/field."""
