"""Exception hierarchy shared by all modules."""


class QRotorError(Exception):
    """Base class for package errors."""


class ConfigError(QRotorError, ValueError):
    """Invalid parameters or configuration."""


class SingularityError(QRotorError, ZeroDivisionError):
    """A formula was evaluated at a pole."""


class SolverError(QRotorError, RuntimeError):
    """Eigensolver failed to meet its convergence contract.

    Attributes
    ----------
    residual : float
        Largest eigenvalue change (in recoil units) at the last refinement.
    """

    def __init__(self, message, residual=float("nan")):
        super().__init__(message)
        self.residual = residual


class EstimationError(QRotorError, RuntimeError):
    """Fringe peak could not be located."""


class InconsistentMeasurementError(QRotorError, ValueError):
    """Measurement set has no real solution (negative radicand)."""


class CalibrationError(QRotorError, ValueError):
    """Calibration constants make the inversion singular."""
