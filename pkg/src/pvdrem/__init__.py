"""Online identification of photovoltaic array parameters and MPP voltage.

The array current ``I`` and voltage ``V`` of a PV array feeding a boost
converter are filtered into a linear regression, whose parameters are
estimated by dynamic regressor extension and mixing (DREM).  The
five-parameter IV model is recovered from the estimate, and an adaptive
observer drives an estimate of the maximum power point voltage.
"""

from .drem import DREMEstimator, DremConfig, DremStage, Excitation, adjugate, mix
from .exceptions import (AlgebraicConstraintError, ConfigurationError, ConvergenceError,
                         DomainError, ExponentOverflow, InsufficientHistory, PVDremError,
                         RecoveryHold, SingularMappingError, StepSizeError)
from .identifier import PVArrayIdentifier
from .mpp import H, MppObserver, MppParams, brute_force_mpp, mpp_voltage, observer_step
from .plant import ControlLaw, PlantParams, PlantState
from .pv_model import (BENCHMARK_A, EnvironmentState, IVParams, ReferenceParams, env_params,
                       iv_curve, open_circuit_voltage, solve_current, voltage_at_current)
from .recovery import ParameterRecovery, map_theta_to_a
from .regressor import RegressorFilter, map_a_to_theta

__version__ = "0.1.0"

__all__ = [
    "DREMEstimator", "DremConfig", "DremStage", "Excitation", "adjugate", "mix",
    "AlgebraicConstraintError", "ConfigurationError", "ConvergenceError", "DomainError",
    "ExponentOverflow", "InsufficientHistory", "PVDremError", "RecoveryHold",
    "SingularMappingError", "StepSizeError", "PVArrayIdentifier",
    "H", "MppObserver", "MppParams", "brute_force_mpp", "mpp_voltage", "observer_step",
    "ControlLaw", "PlantParams", "PlantState",
    "BENCHMARK_A", "EnvironmentState", "IVParams", "ReferenceParams", "env_params", "iv_curve",
    "open_circuit_voltage", "solve_current", "voltage_at_current",
    "ParameterRecovery", "map_theta_to_a", "RegressorFilter", "map_a_to_theta",
]
