"""Exception types raised by virialgeo."""


class VirialGeoError(Exception):
    """Base class for all library errors."""


class SingularMetric(VirialGeoError):
    """The metric is degenerate (or not finite) at the evaluation point."""


class GuardViolation(VirialGeoError):
    """A point left the valid region of the chart.

    ``t`` is the time of the first violation when raised by the integrator
    (``None`` for pointwise evaluations) and ``trajectory`` holds the part of
    the run completed before it.
    """

    def __init__(self, message, t=None, trajectory=None):
        super().__init__(message)
        self.t = t
        self.trajectory = trajectory


class StepLimitExceeded(VirialGeoError):
    pass


class InsufficientSamples(VirialGeoError):
    pass


class RejectedTrajectory(VirialGeoError):
    """Time averages were requested on a trajectory that failed the energy-drift check."""


class RelationFieldMissing(VirialGeoError):
    pass


class DegenerateDegrees(VirialGeoError):
    pass


class InvalidParameter(VirialGeoError, ValueError):
    pass
