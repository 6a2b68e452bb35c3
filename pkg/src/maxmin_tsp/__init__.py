"""Tour construction for min/max TSP by recurrent extremal insertion, with
exact small-instance oracles, route diagnostics, and benchmark harnesses."""

from .instance import (
    DistanceMatrix,
    GeneratorConfig,
    Instance,
    InstanceFormatError,
    PointSet,
    derive_seed,
    generate,
    read_instance,
    write_instance,
)
from .solver import (
    BranchCapExceeded,
    Branching,
    BranchNode,
    Candidate,
    Objective,
    SolveResult,
    SolverConfig,
    Tour,
    init_pair,
    init_third,
    insert,
    insertion_delta,
    pure_tie_break,
    select_candidates,
    solve,
)

__version__ = "0.1.0"

__all__ = [
    "DistanceMatrix",
    "GeneratorConfig",
    "Instance",
    "InstanceFormatError",
    "PointSet",
    "derive_seed",
    "generate",
    "read_instance",
    "write_instance",
    "BranchCapExceeded",
    "Branching",
    "BranchNode",
    "Candidate",
    "Objective",
    "SolveResult",
    "SolverConfig",
    "Tour",
    "init_pair",
    "init_third",
    "insert",
    "insertion_delta",
    "pure_tie_break",
    "select_candidates",
    "solve",
    "__version__",
]
