"""Exception hierarchy shared by all modules."""


class PVDremError(Exception):
    """Base class for every error raised by :mod:`pvdrem`."""


class DomainError(PVDremError, ValueError):
    """An argument lies outside the domain where a model is defined."""


class ConfigurationError(PVDremError, ValueError):
    """A configuration value is invalid or inconsistent."""


class SingularMappingError(PVDremError, ZeroDivisionError):
    """A parameter mapping would divide by zero."""


class ConvergenceError(PVDremError, RuntimeError):
    """An iterative solver ran out of iterations.

    Attributes
    ----------
    residual : float
        Absolute residual at the last iterate.
    """

    def __init__(self, message, residual=float("nan")):
        super().__init__(f"{message} (last residual {residual:.3e})")
        self.residual = residual


class AlgebraicConstraintError(PVDremError, RuntimeError):
    """The array voltage cannot be recovered from the inductor current."""


class StepSizeError(PVDremError, RuntimeError):
    """An explicit integrator step would be unstable even after halving."""


class ExponentOverflow(PVDremError, FloatingPointError):
    """An exponent had to be clamped; ``value`` holds the saturated result."""

    def __init__(self, message, value=float("nan")):
        super().__init__(message)
        self.value = value


class RecoveryHold(PVDremError):
    """Parameter recovery is ill-conditioned; callers keep their previous estimate."""


class InsufficientHistory(PVDremError):
    """The delay line does not yet hold the samples needed for a lookup."""
