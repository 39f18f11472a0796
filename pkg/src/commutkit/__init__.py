"""Commutativity analysis and transactional execution for abstract data
types over finite enumerated state spaces."""

from .analyzer import (ConflictMatrix, TheoremReport, check_any_order,
                       check_convergence, check_undo_equivalence,
                       commuting_bags, full_matrix, render_matrix,
                       semantic_verdict, structural_matrix)
from .catalog import (AdtDefinition, build_adt, build_counter,
                      build_fifoqueue, build_set, build_stack, build_tuple)
from .engine import Engine, History, check_serializable
from .model import (FunctionBag, FunctionSpec, StateRegion, StateSpace,
                    UsageError, check_compensability, check_composition,
                    check_state_commutativity, check_view_independence,
                    compose, refine_function, region_subset)
from .sim import SimConfig, SimStats, run_convergence_trace, run_paired, run_sim

__all__ = [
    "AdtDefinition", "ConflictMatrix", "Engine", "FunctionBag",
    "FunctionSpec", "History", "SimConfig", "SimStats", "StateRegion",
    "StateSpace", "TheoremReport", "UsageError", "build_adt",
    "build_counter", "build_fifoqueue", "build_set", "build_stack",
    "build_tuple", "check_any_order", "check_compensability",
    "check_composition", "check_convergence", "check_serializable",
    "check_state_commutativity", "check_undo_equivalence",
    "check_view_independence", "commuting_bags", "compose", "full_matrix",
    "refine_function", "region_subset", "render_matrix",
    "run_convergence_trace", "run_paired", "run_sim", "semantic_verdict",
    "structural_matrix",
]

__version__ = "0.1.0"
