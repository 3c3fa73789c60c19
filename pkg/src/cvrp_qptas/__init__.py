"""Approximation toolkit for 2d Euclidean capacitated vehicle routing.

Quadtree dissection with portals, a configuration dynamic program over
rounded segment counts, tour partitioning, and brute-force oracles.
"""

from .instance import (
    Instance,
    PerturbedInstance,
    InstanceError,
    parse_instance,
    serialize_instance,
    generate_instance,
    perturb,
    lift_solution,
)
from .solution import Tour, Solution, TypeAssignment, tour_length, is_feasible
from .pipeline import PipelineParams, PipelineResult, solve_qptas

__version__ = "0.1.0"

__all__ = [
    "Instance",
    "PerturbedInstance",
    "InstanceError",
    "parse_instance",
    "serialize_instance",
    "generate_instance",
    "perturb",
    "lift_solution",
    "Tour",
    "Solution",
    "TypeAssignment",
    "tour_length",
    "is_feasible",
    "PipelineParams",
    "PipelineResult",
    "solve_qptas",
]
