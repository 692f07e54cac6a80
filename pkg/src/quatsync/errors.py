"""Exception types raised across quatsync."""


class QuatsyncError(Exception):
    """Base class for all library errors."""


class NotInM(QuatsyncError, ValueError):
    """A 2x2 complex matrix is not the image of a quaternion."""


class BlowUp(QuatsyncError, FloatingPointError):
    """An imaginary-part distance exceeded the overflow guard.

    Attributes
    ----------
    value : float
        Offending distance.
    trajectory : Trajectory or None
        Partial trajectory, attached by the integrator when available.
    """

    def __init__(self, message, value=float("nan")):
        super().__init__(message)
        self.value = value
        self.trajectory = None


class MaxStepsExceeded(QuatsyncError, RuntimeError):
    def __init__(self, message, trajectory=None):
        super().__init__(message)
        self.trajectory = trajectory


class HypothesisViolated(QuatsyncError, ValueError):
    """The real-part spread premise of the decay bound failed at time ``t``."""

    def __init__(self, message, t):
        super().__init__(message)
        self.t = t


class NoReturn(QuatsyncError, RuntimeError):
    """A planar trajectory never came back to the section."""


class NotWeak(QuatsyncError, ValueError):
    """Coupling is not below the critical coupling."""


class NotEquilibrium(QuatsyncError, ValueError):
    pass


class ConfigError(QuatsyncError, ValueError):
    pass
