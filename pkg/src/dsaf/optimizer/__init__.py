"""Exact slice placement: problem instances, kernels, and the solve API."""

from .instance import CONSTRAINT_CLASSES, ProblemInstance, Weights, build_instance
from .solver import (
    ENUMERATION_LIMIT,
    HAS_NUMBA,
    SolveOutcome,
    active_backend,
    check_feasible,
    evaluate_objective,
    placement_for_assignment,
    solve,
)

__all__ = [
    "CONSTRAINT_CLASSES",
    "ENUMERATION_LIMIT",
    "HAS_NUMBA",
    "ProblemInstance",
    "SolveOutcome",
    "Weights",
    "active_backend",
    "build_instance",
    "check_feasible",
    "evaluate_objective",
    "placement_for_assignment",
    "solve",
]
