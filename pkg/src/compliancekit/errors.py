"""Exception types shared across the toolkit."""


class ComplianceKitError(Exception):
    """Base class for all toolkit errors."""


class DegenerateRotation(ComplianceKitError):
    """9-D pose encoding whose embedded rows are parallel or near-zero."""


class ZeroDirection(ComplianceKitError):
    """A direction vector with norm too small to normalize."""


class ForceLimitExceeded(ComplianceKitError):
    """External force exceeded the controller's configured limit."""

    def __init__(self, magnitude, limit, step=None):
        self.magnitude = magnitude
        self.limit = limit
        self.step = step
        where = f" at step {step}" if step is not None else ""
        super().__init__(f"|f_ext| = {magnitude:.6g} N exceeds limit {limit:.6g} N{where}")


class AssumptionViolated(ComplianceKitError):
    """Contact model violates a precondition (pinching, or non-positive contact force)."""


class DegenerateStiffness(ComplianceKitError):
    """Stiffness value that cannot support the requested operation (k_low <= 0)."""


class EmptyOverlap(ComplianceKitError):
    """Episode pose and wrench tracks do not overlap in time."""


class InsufficientData(ComplianceKitError):
    """Signal track does not cover the requested time interval."""


class FormatError(ComplianceKitError):
    """Malformed episode / model / config file."""
