"""Exception types raised by the solvers and integrators."""


class SpinQSDError(Exception):
    """Base class for all errors raised by this package."""


class SolverError(SpinQSDError):
    """Failure inside a linear-algebra solver stage."""


class NonConvergence(SolverError):
    pass


class AmbiguousNull(SolverError):
    """More than one near-null direction of the Liouvillian was found."""


class MemoryBudgetExceeded(SpinQSDError):
    pass


class IntegrationError(SpinQSDError):
    """Failure of a time integrator (master equation or SDE)."""


class Blowup(IntegrationError):
    """A stochastic trajectory produced a non-finite label."""

    def __init__(self, message, trajectory=None, time=None):
        super().__init__(message)
        self.trajectory = trajectory
        self.time = time


class NotCyclic(SpinQSDError, ValueError):
    """Requested a torus quantity where the deterministic flow has no closed orbits."""


class AtFixedPoint(SpinQSDError, ValueError):
    pass


class DegenerateDrive(SpinQSDError, ValueError):
    pass


class Critical(SpinQSDError, ValueError):
    pass


class MethodMismatch(SpinQSDError):
    """Exact and stochastic estimates disagree on their shared system sizes."""
