"""Equilibria, dynamics and fields of unit charges on a conducting needle."""

__version__ = "0.1.0"

from .config import ChargeConfiguration, ClosedSimplexPoint, OpenSimplexPoint, equispaced, reflect  # noqa: E402
from .distribution import EmpiricalCdf, DyadicTarget, dyadic_index, sup_distance_to_uniform  # noqa: E402
from .dynamics import DynamicsSpec, System, Trajectory, flow_to_equilibrium, simulate, time_average  # noqa: E402
from .equilibrium import EquilibriumReport, Method, net_force, solve  # noqa: E402
from .errors import ConvergenceError, NeedleError, ValidationError  # noqa: E402
from .field import SpacePoint, discrete_field, pv_field_on_needle, uniform_field_offneedle  # noqa: E402

__all__ = [
    "ChargeConfiguration", "ClosedSimplexPoint", "OpenSimplexPoint", "equispaced", "reflect",
    "EmpiricalCdf", "DyadicTarget", "dyadic_index", "sup_distance_to_uniform",
    "DynamicsSpec", "System", "Trajectory", "flow_to_equilibrium", "simulate", "time_average",
    "EquilibriumReport", "Method", "net_force", "solve",
    "ConvergenceError", "NeedleError", "ValidationError",
    "SpacePoint", "discrete_field", "pv_field_on_needle", "uniform_field_offneedle",
]
