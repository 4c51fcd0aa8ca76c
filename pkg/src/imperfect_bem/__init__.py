"""Boundary-integral solver for the imperfect-bonding transmission problem in 2-D.

Inclusions with an interface resistance ``gamma`` in a harmonic background
field: layer operators, the exterior Dirichlet-to-Neumann map and its
resolvent, resistive capacitance matrices, and the field solver.
"""

from .boundary_ops import LayerOperators, eval_double_layer, eval_single_layer, tangential_derivative
from .capacitance import (
    analytic_ball_capacitance,
    analytic_disk_capacitance,
    capacitance_expansion,
    capacitance_matrix,
    excision_invariance_check,
)
from .config import ExperimentConfig, load_config
from .dtn import build_dtn, equilibrium, indicator_density, resolvent_apply
from .errors import CapacityGuardError, ClearanceError, ConfigError, GeometryError, ImperfectBEMError
from .geometry import Assembly, CurveParametrization, assemble, build_component, two_disks
from .solver import (
    HarmonicBackground,
    SampleRegion,
    TransmissionProblem,
    first_order_term,
    gradient_sup,
    solve_imperfect,
    solve_perfect,
)

__version__ = "0.1.0"

__all__ = [
    "Assembly", "CapacityGuardError", "ClearanceError", "ConfigError", "CurveParametrization",
    "ExperimentConfig", "GeometryError", "HarmonicBackground", "ImperfectBEMError", "LayerOperators",
    "SampleRegion", "TransmissionProblem", "analytic_ball_capacitance", "analytic_disk_capacitance",
    "assemble", "build_component", "build_dtn", "capacitance_expansion", "capacitance_matrix",
    "equilibrium", "eval_double_layer", "eval_single_layer", "excision_invariance_check",
    "first_order_term", "gradient_sup", "indicator_density", "load_config", "resolvent_apply",
    "solve_imperfect", "solve_perfect", "tangential_derivative", "two_disks",
]
