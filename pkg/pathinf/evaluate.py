"""Scoring inferred graphs against ground truth and across subsamples."""

from __future__ import annotations

from collections import Counter
from collections.abc import Callable, Iterable, Sequence
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
import math
from typing import Any

import numpy as np

from .const import (
    DEFAULT_FRACTION,
    DEFAULT_P_MISS_NEG,
    DEFAULT_P_MISS_POS,
    DEFAULT_REPEATS,
    DEFAULT_SEED,
    DEFAULT_SWEEP_REPEATS,
    LOGGER,
)
from .exceptions import ConfigurationError, DimensionError
from .infer import PathGraph
from .observations import ObservationMatrix
from .pipeline import PipelineConfig, run_pipeline
from .simulate import GroundTruthDag, SimulationConfig, generate_dataset
from .summarize import MissingnessPrior

type LabelEdge = tuple[str, str]


def _label_edge(a: str, b: str) -> LabelEdge:
    return (a, b) if a <= b else (b, a)


def _map[T, R](
    func: Callable[[T], R], items: Sequence[T], workers: int | None
) -> list[R]:
    """Apply ``func`` in submission order, threaded when ``workers`` > 1."""
    if workers is not None and workers > 1 and len(items) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(func, items))
    return [func(item) for item in items]


@dataclass(frozen=True)
class GraphDiff:
    """Edge-level comparison of an inferred graph with the true skeleton."""

    true_edges: int
    recovered: int
    false_pos: int
    false_neg: int

    @property
    def fp_rate(self) -> float:
        """Return false positives per true edge; may exceed 1."""
        if self.true_edges == 0:
            return math.inf if self.false_pos else 0.0
        return self.false_pos / self.true_edges

    @property
    def fn_rate(self) -> float:
        """Return the share of true edges that were missed."""
        if self.true_edges == 0:
            return 0.0
        return self.false_neg / self.true_edges

    def as_dict(self) -> dict[str, Any]:
        """Return counts and rates."""
        return {
            "true_edges": self.true_edges,
            "recovered": self.recovered,
            "false_pos": self.false_pos,
            "false_neg": self.false_neg,
            "fp_rate": self.fp_rate,
            "fn_rate": self.fn_rate,
        }


def diff(inferred: PathGraph, truth: GroundTruthDag) -> GraphDiff:
    """Compare ``inferred`` with the undirected skeleton of ``truth``.

    Raises:
        DimensionError: If the node counts differ.

    """
    if inferred.n_vars != truth.n_nodes:
        raise DimensionError(
            f"Inferred graph has {inferred.n_vars} nodes, truth has {truth.n_nodes}"
        )
    skeleton = truth.skeleton()
    edges = set(inferred.edges)
    recovered = len(edges & skeleton)
    return GraphDiff(
        true_edges=len(skeleton),
        recovered=recovered,
        false_pos=len(edges - skeleton),
        false_neg=len(skeleton) - recovered,
    )


@dataclass(frozen=True)
class StabilityReport:
    """How often each edge reappears on row subsamples."""

    frequencies: dict[LabelEdge, float]
    full_edges: tuple[LabelEdge, ...]
    fraction: float
    repeats: int

    def sorted_frequencies(self) -> list[tuple[LabelEdge, float]]:
        """Return edges by descending frequency, then by label."""
        return sorted(self.frequencies.items(), key=lambda item: (-item[1], item[0]))

    def min_full_frequency(self) -> float:
        """Return the lowest frequency among the full-data edges."""
        return min((self.frequencies[edge] for edge in self.full_edges), default=1.0)


def subsample_size(n_rows: int, fraction: float) -> int:
    """Return ``ceil(fraction * n_rows)`` robust to float noise."""
    return math.ceil(round(fraction * n_rows, 9))


def cross_validate(
    obs: ObservationMatrix,
    fraction: float = DEFAULT_FRACTION,
    repeats: int = DEFAULT_REPEATS,
    config: PipelineConfig | None = None,
    seed: int = DEFAULT_SEED,
    *,
    workers: int | None = None,
) -> StabilityReport:
    """Rerun the pipeline on random row subsamples and count edge recurrence.

    Each run draws ``ceil(fraction * m)`` distinct rows from its own seed
    stream spawned from ``seed``.

    Raises:
        ConfigurationError: On a fraction outside (0, 1], fewer than one
            repeat or an empty subsample.

    """
    if not 0 < fraction <= 1:
        raise ConfigurationError(f"fraction must lie in (0, 1], got {fraction}")
    if repeats < 1:
        raise ConfigurationError(f"repeats must be at least 1, got {repeats}")
    size = subsample_size(obs.n_rows, fraction)
    if size < 1:
        raise ConfigurationError("Subsample would contain no rows")
    config = config or PipelineConfig()

    full = run_pipeline(obs, config).graph
    full_edges = tuple(sorted(_label_edge(*edge) for edge in full.labelled_edges()))

    def one_run(child: np.random.SeedSequence) -> list[LabelEdge]:
        rng = np.random.default_rng(child)
        rows = np.sort(rng.choice(obs.n_rows, size=size, replace=False))
        graph = run_pipeline(obs.select_rows(rows), config).graph
        return [_label_edge(*edge) for edge in graph.labelled_edges()]

    children = np.random.SeedSequence(seed).spawn(repeats)
    counts: Counter[LabelEdge] = Counter()
    for edges in _map(one_run, children, workers):
        counts.update(edges)

    frequencies = {edge: counts[edge] / repeats for edge in set(counts) | set(full_edges)}
    LOGGER.info(
        "Cross-validated %d runs at fraction %.3g: %d edges seen",
        repeats,
        fraction,
        len(frequencies),
    )
    return StabilityReport(
        frequencies=dict(sorted(frequencies.items())),
        full_edges=full_edges,
        fraction=fraction,
        repeats=repeats,
    )


@dataclass(frozen=True)
class SweepCell:
    """Repeated comparisons for one (edge count, missingness) setting."""

    n_edges: int
    p_miss_pos: float
    diffs: tuple[GraphDiff, ...] = field(default_factory=tuple)

    def _rates(self, name: str) -> np.ndarray:
        return np.array([getattr(d, name) for d in self.diffs], dtype=np.float64)

    @property
    def mean_fp(self) -> float:
        """Return the mean false positive rate."""
        return float(self._rates("fp_rate").mean())

    @property
    def mean_fn(self) -> float:
        """Return the mean false negative rate."""
        return float(self._rates("fn_rate").mean())

    @property
    def std_fp(self) -> float:
        """Return the population standard deviation of the FP rate."""
        return float(self._rates("fp_rate").std())

    @property
    def std_fn(self) -> float:
        """Return the population standard deviation of the FN rate."""
        return float(self._rates("fn_rate").std())

    def as_dict(self) -> dict[str, Any]:
        """Return the summary statistics and every repeat."""
        return {
            "n_edges": self.n_edges,
            "p_miss_pos": self.p_miss_pos,
            "mean_fp_rate": self.mean_fp,
            "std_fp_rate": self.std_fp,
            "mean_fn_rate": self.mean_fn,
            "std_fn_rate": self.std_fn,
            "repeats": [d.as_dict() for d in self.diffs],
        }


def prior_for(cfg: SimulationConfig) -> MissingnessPrior:
    """Return the inference prior matching a simulation's missingness.

    Probabilities outside the prior's open range fall back to the defaults.
    """
    return MissingnessPrior(
        p_miss_pos=cfg.p_miss_pos if cfg.p_miss_pos > 0 else DEFAULT_P_MISS_POS,
        p_miss_neg=cfg.p_miss_neg if 0 < cfg.p_miss_neg < 1 else DEFAULT_P_MISS_NEG,
    )


def _derive_seed(seed: np.random.SeedSequence) -> int:
    return int(seed.generate_state(1, dtype=np.uint32)[0])


def sweep(
    grid: Sequence[SimulationConfig],
    repeats: int = DEFAULT_SWEEP_REPEATS,
    seed: int = DEFAULT_SEED,
    *,
    pipeline_config: PipelineConfig | None = None,
    workers: int | None = None,
) -> list[SweepCell]:
    """Simulate, infer and score every grid cell ``repeats`` times.

    Each cell and each repeat within it gets its own simulation seed derived
    from ``seed``. The inference prior follows the cell's missingness.

    Raises:
        ConfigurationError: On an empty grid or fewer than one repeat.

    """
    if not grid:
        raise ConfigurationError("Sweep grid is empty")
    if repeats < 1:
        raise ConfigurationError(f"repeats must be at least 1, got {repeats}")
    base = pipeline_config or PipelineConfig()

    jobs: list[tuple[int, SimulationConfig]] = []
    for index, (cell, cell_seed) in enumerate(
        zip(grid, np.random.SeedSequence(seed).spawn(len(grid)), strict=True)
    ):
        jobs.extend(
            (index, replace(cell, seed=_derive_seed(child)))
            for child in cell_seed.spawn(repeats)
        )

    def one_job(job: tuple[int, SimulationConfig]) -> GraphDiff:
        cfg = job[1]
        obs, truth = generate_dataset(cfg)
        config = PipelineConfig(solver=base.solver, prior=prior_for(cfg))
        return diff(run_pipeline(obs, config).graph, truth)

    results: dict[int, list[GraphDiff]] = {index: [] for index in range(len(grid))}
    for (index, _), result in zip(jobs, _map(one_job, jobs, workers), strict=True):
        results[index].append(result)

    cells = [
        SweepCell(cell.n_edges, cell.p_miss_pos, tuple(results[index]))
        for index, cell in enumerate(grid)
    ]
    for cell in cells:
        LOGGER.info(
            "Cell edges=%d p=%.2f: FP %.1f%% FN %.1f%%",
            cell.n_edges,
            cell.p_miss_pos,
            100 * cell.mean_fp,
            100 * cell.mean_fn,
        )
    return cells


def build_grid(
    edges_grid: Iterable[int],
    p_grid: Iterable[float],
    base: SimulationConfig | None = None,
) -> list[SimulationConfig]:
    """Return one configuration per (edge count, p) pair, edges outermost."""
    base = base or SimulationConfig()
    p_values = list(p_grid)
    return [
        replace(base, n_edges=n_edges, p_miss_pos=p)
        for n_edges in edges_grid
        for p in p_values
    ]


def _percent(mean: float, std: float) -> str:
    return f"{100 * mean:.1f}% ± {100 * std:.1f}%"


def sweep_table(cells: Sequence[SweepCell]) -> list[list[str]]:
    """Lay sweep results out as two blocks, false positive then false negative.

    Rows are edge counts and columns are values of ``p_miss_pos``; each cell
    reads ``mean% ± std%``. Settings absent from ``cells`` stay empty.
    """
    edge_counts = sorted({cell.n_edges for cell in cells})
    p_values = sorted({cell.p_miss_pos for cell in cells})
    lookup = {(cell.n_edges, cell.p_miss_pos): cell for cell in cells}

    rows = [["rate", "n_edges", *(f"p={p:g}" for p in p_values)]]
    for block, mean, std in (
        ("false_positive", "mean_fp", "std_fp"),
        ("false_negative", "mean_fn", "std_fn"),
    ):
        for n_edges in edge_counts:
            row = [block, str(n_edges)]
            for p in p_values:
                cell = lookup.get((n_edges, p))
                row.append(
                    _percent(getattr(cell, mean), getattr(cell, std)) if cell else ""
                )
            rows.append(row)
    return rows


@dataclass(frozen=True)
class EdgeComparison:
    """Label-based comparison of two inferred graphs."""

    shared: tuple[LabelEdge, ...]
    only_a: tuple[LabelEdge, ...]
    only_b: tuple[LabelEdge, ...]
    # edges touching a variable the other graph does not have
    uncomparable: tuple[LabelEdge, ...]

    def as_dict(self) -> dict[str, list[list[str]]]:
        """Return each group as lists of label pairs."""
        return {
            "shared": [list(e) for e in self.shared],
            "only_a": [list(e) for e in self.only_a],
            "only_b": [list(e) for e in self.only_b],
            "uncomparable": [list(e) for e in self.uncomparable],
        }


def shared_edges(a: PathGraph, b: PathGraph) -> EdgeComparison:
    """Compare two graphs by variable label rather than index."""
    common = set(a.labels) & set(b.labels)
    edges_a = {_label_edge(*e) for e in a.labelled_edges()}
    edges_b = {_label_edge(*e) for e in b.labelled_edges()}

    def comparable(edge: LabelEdge) -> bool:
        return edge[0] in common and edge[1] in common

    kept_a = {e for e in edges_a if comparable(e)}
    kept_b = {e for e in edges_b if comparable(e)}
    return EdgeComparison(
        shared=tuple(sorted(kept_a & kept_b)),
        only_a=tuple(sorted(kept_a - kept_b)),
        only_b=tuple(sorted(kept_b - kept_a)),
        uncomparable=tuple(sorted((edges_a | edges_b) - kept_a - kept_b)),
    )
