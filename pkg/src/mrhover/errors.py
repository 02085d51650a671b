"""Exception types raised by the library."""


class InvalidPlatform(ValueError):
    """Rotor layout violates a structural requirement (rotor count, tilt pattern, ...)."""


class AllocationError(RuntimeError):
    """Allocation analysis cannot proceed (no zero-moment direction, near-singular algebra)."""


class ThrustSingularity(RuntimeError):
    """Controller thrust state crossed its lower guard; the control law is undefined there."""


class ControllerFault(RuntimeError):
    """A controller intermediate became non-finite."""


class IntegrationDiverged(RuntimeError):
    """Numerical integration produced a non-finite state."""
