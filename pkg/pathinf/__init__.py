"""Pathway inference from incomplete binary observations.

Observation rows are summarized into a sparse distribution over complete
binary states, and a graph with as few edges as the greedy rule finds is
inferred so that every likely state's positive variables are connected.
"""

from __future__ import annotations

from .const import VERSION as __version__
from .evaluate import cross_validate, diff, shared_edges, sweep, sweep_table
from .exceptions import (
    CapacityError,
    ConfigurationError,
    ContractViolationError,
    DegenerateResultError,
    DimensionError,
    ParseError,
    PathInfError,
)
from .infer import PathGraph, greedy_infer, is_satisfied, minimum_edge_graph
from .observations import ObservationMatrix, State
from .pipeline import PipelineConfig, PipelineResult, run_pipeline
from .simulate import GroundTruthDag, SimulationConfig, generate_dataset
from .summarize import MissingnessPrior, SolverOptions, StateMatrix, fit, prune

__all__ = [
    "CapacityError",
    "ConfigurationError",
    "ContractViolationError",
    "DegenerateResultError",
    "DimensionError",
    "GroundTruthDag",
    "MissingnessPrior",
    "ObservationMatrix",
    "ParseError",
    "PathGraph",
    "PathInfError",
    "PipelineConfig",
    "PipelineResult",
    "SimulationConfig",
    "SolverOptions",
    "State",
    "StateMatrix",
    "__version__",
    "cross_validate",
    "diff",
    "fit",
    "generate_dataset",
    "greedy_infer",
    "is_satisfied",
    "minimum_edge_graph",
    "prune",
    "run_pipeline",
    "shared_edges",
    "sweep",
    "sweep_table",
]
