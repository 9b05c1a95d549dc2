"""Summarize, prune and infer in one call."""

from __future__ import annotations

from dataclasses import asdict, dataclass, field
from typing import Any

from .const import LOGGER
from .infer import InferenceTrace, PathGraph, greedy_infer
from .observations import ObservationMatrix
from .summarize import (
    MissingnessPrior,
    SolverOptions,
    StateMatrix,
    SummaryDistribution,
    fit,
    prune,
)


@dataclass(frozen=True)
class PipelineConfig:
    """Solver options and missingness prior of a pipeline run."""

    solver: SolverOptions = field(default_factory=SolverOptions)
    prior: MissingnessPrior = field(default_factory=MissingnessPrior)

    def as_dict(self) -> dict[str, Any]:
        """Return the flattened configuration."""
        return {**asdict(self.solver), **asdict(self.prior)}


@dataclass(frozen=True, eq=False)
class PipelineResult:
    """Every intermediate artifact of a pipeline run."""

    distribution: SummaryDistribution
    state_matrix: StateMatrix
    graph: PathGraph
    trace: InferenceTrace


def run_pipeline(
    obs: ObservationMatrix, config: PipelineConfig | None = None
) -> PipelineResult:
    """Fit the state distribution, prune it and infer the pathway graph."""
    config = config or PipelineConfig()
    distribution = fit(obs, config.prior, config.solver)
    state_matrix = prune(distribution, config.solver.eps_prune)
    graph, trace = greedy_infer(state_matrix)
    LOGGER.debug(
        "Pipeline kept %d states and inferred %d edges",
        len(state_matrix),
        len(graph.edges),
    )
    return PipelineResult(distribution, state_matrix, graph, trace)
