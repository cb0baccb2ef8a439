"""Submodular maximization under multiple knapsack constraints."""

from .exact import brute_force_solve
from .hull import FreeConstraint, PartitionMatroid, UniformMatroid
from .model import (
    Instance,
    InstanceFormatError,
    InternalInvariantError,
    MultiKnapsackConstraint,
    Solution,
    load_instance,
    load_solution,
    save_instance,
    save_solution,
    validate_solution,
)
from .objectives import (
    CoverageObjective,
    CutObjective,
    ModularObjective,
    TableObjective,
)
from .solver import SolverConfig, solve, solve_restricted, solve_uniform, theory_note

__version__ = "0.1.0"

__all__ = [
    "brute_force_solve",
    "CoverageObjective",
    "CutObjective",
    "FreeConstraint",
    "Instance",
    "InstanceFormatError",
    "InternalInvariantError",
    "ModularObjective",
    "MultiKnapsackConstraint",
    "PartitionMatroid",
    "Solution",
    "SolverConfig",
    "TableObjective",
    "UniformMatroid",
    "load_instance",
    "load_solution",
    "save_instance",
    "save_solution",
    "solve",
    "solve_restricted",
    "solve_uniform",
    "theory_note",
    "validate_solution",
    "__version__",
]
