"""Synthetic pathway data: random weighted DAGs, cascades and missingness."""

from __future__ import annotations

from collections.abc import Mapping, Sequence
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from functools import cached_property
from typing import Any

import networkx as nx
import numpy as np

from .const import (
    DAG_SAMPLING_LAW,
    DEFAULT_N_EDGES,
    DEFAULT_N_NODES,
    DEFAULT_N_SAMPLES,
    DEFAULT_P_MISS_NEG,
    DEFAULT_P_MISS_POS,
    DEFAULT_POISSON_LAMBDA,
    DEFAULT_SEED,
    LOGGER,
    MISSING,
)
from .exceptions import ConfigurationError, DimensionError
from .observations import ObservationMatrix


def default_labels(n_nodes: int) -> tuple[str, ...]:
    """Return ``X0 .. X{n-1}``."""
    return tuple(f"X{i}" for i in range(n_nodes))


def max_edges(n_nodes: int) -> int:
    """Return the largest edge count a DAG on ``n_nodes`` can have."""
    return n_nodes * (n_nodes - 1) // 2


@dataclass(frozen=True, eq=False)
class GroundTruthDag:
    """Weighted directed acyclic graph used as simulation ground truth."""

    labels: tuple[str, ...]
    weights: Mapping[tuple[int, int], float]
    metadata: Mapping[str, Any] = field(default_factory=dict)

    def __post_init__(self) -> None:
        """Validate endpoints, weights and acyclicity."""
        labels = tuple(self.labels)
        if not labels:
            raise DimensionError("A DAG needs at least one node")
        weights = {(int(a), int(b)): float(w) for (a, b), w in self.weights.items()}
        for (a, b), w in weights.items():
            if not (0 <= a < len(labels) and 0 <= b < len(labels)):
                raise DimensionError(f"Edge {a}->{b} out of range")
            if a == b:
                raise ConfigurationError(f"Self-loop on node {a}")
            if not w > 0:
                raise ConfigurationError(f"Edge {a}->{b} has non-positive weight {w}")
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "weights", dict(sorted(weights.items())))
        object.__setattr__(self, "metadata", dict(self.metadata))
        if not nx.is_directed_acyclic_graph(self.to_networkx()):
            raise ConfigurationError("Ground-truth graph contains a directed cycle")

    @property
    def n_nodes(self) -> int:
        """Return the number of nodes."""
        return len(self.labels)

    @property
    def edges(self) -> list[tuple[int, int]]:
        """Return the directed edges in ascending order."""
        return list(self.weights)

    @cached_property
    def sources(self) -> tuple[int, ...]:
        """Return the nodes without incoming edges, ascending."""
        targets = {b for _, b in self.weights}
        return tuple(i for i in range(self.n_nodes) if i not in targets)

    @cached_property
    def weight_matrix(self) -> np.ndarray:
        """Return the dense ``(from, to)`` weight matrix, zero where absent."""
        matrix = np.zeros((self.n_nodes, self.n_nodes), dtype=np.float64)
        for (a, b), w in self.weights.items():
            matrix[a, b] = w
        matrix.setflags(write=False)
        return matrix

    def skeleton(self) -> set[tuple[int, int]]:
        """Return the undirected edge set as ascending index pairs."""
        return {(min(a, b), max(a, b)) for a, b in self.weights}

    def to_networkx(self) -> nx.DiGraph:
        """Return the graph as a weighted networkx DiGraph."""
        graph = nx.DiGraph()
        graph.add_nodes_from(range(self.n_nodes))
        graph.add_weighted_edges_from((a, b, w) for (a, b), w in self.weights.items())
        return graph


@dataclass(frozen=True)
class SimulationConfig:
    """Parameters of one simulated dataset."""

    n_nodes: int = DEFAULT_N_NODES
    n_edges: int = DEFAULT_N_EDGES
    n_samples: int = DEFAULT_N_SAMPLES
    poisson_lambda: float = DEFAULT_POISSON_LAMBDA
    p_miss_pos: float = DEFAULT_P_MISS_POS
    p_miss_neg: float = DEFAULT_P_MISS_NEG
    seed: int = DEFAULT_SEED

    def __post_init__(self) -> None:
        """Validate feasibility."""
        if self.n_nodes < 1:
            raise ConfigurationError(f"n_nodes must be positive, got {self.n_nodes}")
        if not 0 <= self.n_edges <= max_edges(self.n_nodes):
            raise ConfigurationError(
                f"infeasible edge count: {self.n_edges} edges on {self.n_nodes} "
                f"nodes (at most {max_edges(self.n_nodes)})"
            )
        if self.n_samples < 1:
            raise ConfigurationError(
                f"n_samples must be positive, got {self.n_samples}"
            )
        if not self.poisson_lambda > 0:
            raise ConfigurationError(
                f"poisson_lambda must be positive, got {self.poisson_lambda}"
            )
        if not 0 <= self.p_miss_pos < 0.5:
            raise ConfigurationError(
                f"p_miss_pos must lie in [0, 0.5), got {self.p_miss_pos}"
            )
        if not 0 <= self.p_miss_neg <= 1:
            raise ConfigurationError(
                f"p_miss_neg must lie in [0, 1], got {self.p_miss_neg}"
            )

    def as_dict(self) -> dict[str, Any]:
        """Return the configuration as a plain dictionary."""
        return asdict(self)


def random_dag(
    n_nodes: int,
    n_edges: int,
    rng: np.random.Generator,
    labels: Sequence[str] | None = None,
) -> GroundTruthDag:
    """Draw a random weighted DAG.

    A uniformly random permutation fixes the topological order, ``n_edges``
    distinct forward pairs are drawn uniformly without replacement, and each
    edge gets an independent weight in (0, 1].

    Raises:
        ConfigurationError: If ``n_edges`` is not feasible for ``n_nodes``.

    """
    if n_nodes < 1 or not 0 <= n_edges <= max_edges(n_nodes):
        raise ConfigurationError(
            f"infeasible edge count: {n_edges} edges on {n_nodes} nodes"
        )
    labels = tuple(labels) if labels is not None else default_labels(n_nodes)
    if len(labels) != n_nodes:
        raise DimensionError(f"{len(labels)} labels for {n_nodes} nodes")

    order = rng.permutation(n_nodes)
    earlier, later = np.triu_indices(n_nodes, k=1)
    chosen = rng.choice(earlier.size, size=n_edges, replace=False)
    weights = 1.0 - rng.random(n_edges)
    edges = {
        (int(order[earlier[k]]), int(order[later[k]])): float(w)
        for k, w in zip(chosen, weights, strict=True)
    }
    return GroundTruthDag(labels, edges, {"dag_law": DAG_SAMPLING_LAW})


def sample_cascade(
    dag: GroundTruthDag,
    lam: float,
    rng: np.random.Generator,
    *,
    steps: int | None = None,
) -> np.ndarray:
    """Sample one cascade of positive nodes.

    Draws the step count from Poisson(``lam``) unless ``steps`` is given,
    starts from a uniformly chosen source and then marks exactly one new node
    per step. A frontier node is picked with probability proportional to the
    total weight of its in-edges from positive nodes. The cascade stops early
    when the frontier is empty.

    Returns:
        Length-``n_nodes`` 0/1 vector.

    """
    n_steps = int(rng.poisson(lam)) if steps is None else steps
    sources = dag.sources
    positive = np.zeros(dag.n_nodes, dtype=bool)
    positive[sources[int(rng.integers(len(sources)))]] = True

    for _ in range(n_steps):
        pull = positive.astype(np.float64) @ dag.weight_matrix
        pull[positive] = 0.0
        total = pull.sum()
        if total <= 0:
            break
        positive[rng.choice(dag.n_nodes, p=pull / total)] = True
    return positive.astype(np.int8)


def inject_missing(
    sample: Sequence[int] | np.ndarray,
    p_miss_pos: float,
    p_miss_neg: float,
    rng: np.random.Generator,
) -> np.ndarray:
    """Hide each entry independently, positives with ``p_miss_pos``.

    Raises:
        ConfigurationError: If a probability lies outside [0, 1].

    """
    for name, value in (("p_miss_pos", p_miss_pos), ("p_miss_neg", p_miss_neg)):
        if not 0 <= value <= 1:
            raise ConfigurationError(f"{name} must lie in [0, 1], got {value}")
    values = np.asarray(sample, dtype=np.int8)
    threshold = np.where(values == 1, p_miss_pos, p_miss_neg)
    return np.where(rng.random(values.size) < threshold, MISSING, values).astype(
        np.int8
    )


def generate_dataset(
    cfg: SimulationConfig, *, workers: int | None = None
) -> tuple[ObservationMatrix, GroundTruthDag]:
    """Generate one DAG and ``cfg.n_samples`` masked cascades from it.

    The master seed is split into a DAG stream and a sample stream; the sample
    stream is split once more into one stream per sample, so the output does
    not depend on ``workers``.

    Args:
        cfg: Simulation parameters.
        workers: Thread count for sample generation; serial when None or 1.

    Returns:
        The observation matrix and its ground-truth DAG.

    """
    dag_seed, sample_seed = np.random.SeedSequence(cfg.seed).spawn(2)
    dag = random_dag(cfg.n_nodes, cfg.n_edges, np.random.default_rng(dag_seed))
    dag = GroundTruthDag(
        dag.labels,
        dag.weights,
        {**dag.metadata, "config": cfg.as_dict()},
    )

    def one_row(seed: np.random.SeedSequence) -> np.ndarray:
        rng = np.random.default_rng(seed)
        sample = sample_cascade(dag, cfg.poisson_lambda, rng)
        return inject_missing(sample, cfg.p_miss_pos, cfg.p_miss_neg, rng)

    children = sample_seed.spawn(cfg.n_samples)
    if workers is not None and workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(one_row, children))
    else:
        rows = [one_row(child) for child in children]

    LOGGER.info(
        "Generated %d samples on %d nodes with %d edges (seed %d)",
        cfg.n_samples,
        cfg.n_nodes,
        cfg.n_edges,
        cfg.seed,
    )
    return ObservationMatrix(dag.labels, np.vstack(rows)), dag
