"""Magnetic flows on 2-step nilpotent Lie groups: integration, first integrals
and numerical certificates of integrability."""

__version__ = "0.1.0"

from .errors import ConfigError, IntegrationDiverged, InvalidInputError, MismatchedForceError
from .flow import PhaseState, Trajectory, integrate
from .magnetic import LorentzForce, force_from_two_form, heisenberg_force, kodaira_thurston_force
from .nilalgebra import MetricNilpotentAlgebra, preset
from .tensors import SymTensor

__all__ = [
    "ConfigError",
    "IntegrationDiverged",
    "InvalidInputError",
    "LorentzForce",
    "MetricNilpotentAlgebra",
    "MismatchedForceError",
    "PhaseState",
    "SymTensor",
    "Trajectory",
    "force_from_two_form",
    "heisenberg_force",
    "integrate",
    "kodaira_thurston_force",
    "preset",
]
