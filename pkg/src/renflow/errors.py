"""Exception types shared across the toolkit."""

from __future__ import annotations


class RenflowError(Exception):
    """Base class for all toolkit errors."""


class ConfigError(RenflowError):
    """Invalid user configuration (bad model descriptor, bad flags)."""


class BadParams(ConfigError):
    """Model parameters outside their admissible range."""


class CurvatureNotNegative(ConfigError):
    """The curvature check on the validation grid found a point with kappa >= 0."""


class NumericalError(RenflowError):
    """A computation failed for numerical reasons."""


class BoundaryPoint(NumericalError):
    """An interior-only evaluation was requested at rho = 0."""


class StepSizeUnderflow(NumericalError):
    """The adaptive integrator could not meet its tolerance."""


class LeftChart(NumericalError):
    """A trajectory left the truncated chart box."""


class Trapped(NumericalError):
    """The trapping cutoff fired before the flow reached the boundary.

    ``direction`` is one of ``"forward"``, ``"backward"`` or ``"both"``.
    """

    def __init__(self, direction: str, message: str | None = None):
        self.direction = direction
        super().__init__(message or f"trapped ({direction})")


class NoBracket(NumericalError):
    """Shooting could not bracket the requested endpoint."""


class NoIntersection(NumericalError):
    """Two geodesics do not meet."""


class Tangential(NumericalError):
    """Two geodesics meet at a vanishing angle."""


class DegenerateImage(NumericalError):
    """A Moebius map sent two distinct boundary points to the same point."""


class DegenerateTriangle(NumericalError):
    """Three geodesics do not bound a proper triangle."""


class InsufficientSamples(NumericalError):
    """Too many Monte Carlo samples were rejected."""


class AllEscaped(NumericalError):
    """The non-escaping mass vanished on the whole time grid."""


class NonConvexJ(ConfigError):
    """A test function failed the discrete convexity check."""


class OverlappingIntervals(RenflowError):
    """Boundary intervals of a crossing box intersect; the mass is infinite."""


class VerificationFailed(RenflowError):
    """At least one acceptance criterion failed."""
