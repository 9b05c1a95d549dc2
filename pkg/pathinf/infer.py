"""Greedy minimum-edge inference of the undirected pathway graph."""

from __future__ import annotations

from collections import defaultdict
from collections.abc import Iterable, Sequence
from dataclasses import dataclass, field
from itertools import combinations

from .const import LOGGER
from .exceptions import ConfigurationError, ContractViolationError, DimensionError
from .summarize import StateMatrix

type Edge = tuple[int, int]

# Relative slack under which two scores count as tied
SCORE_TIE_TOLERANCE = 1e-12

# Largest variable count accepted by the exhaustive search
MAX_EXHAUSTIVE_VARS = 8


def _edge(x: int, y: int) -> Edge:
    return (x, y) if x < y else (y, x)


@dataclass
class PathGraph:
    """Undirected graph over the observed variables."""

    labels: tuple[str, ...]
    edges: set[Edge] = field(default_factory=set)

    def __post_init__(self) -> None:
        """Normalize and validate the edge set."""
        self.labels = tuple(self.labels)
        edges = set(self.edges)
        self.edges = set()
        for x, y in edges:
            self.add_edge(x, y)

    @property
    def n_vars(self) -> int:
        """Return the number of vertices."""
        return len(self.labels)

    def check_vertex(self, vertex: int) -> None:
        """Raise DimensionError when ``vertex`` is out of range."""
        if not 0 <= vertex < self.n_vars:
            raise DimensionError(
                f"Vertex {vertex} out of range for {self.n_vars} variables"
            )

    def add_edge(self, x: int, y: int) -> Edge:
        """Add the undirected edge ``x -- y`` and return it normalized."""
        self.check_vertex(x)
        self.check_vertex(y)
        if x == y:
            raise DimensionError(f"Self-loop on vertex {x}")
        edge = _edge(x, y)
        self.edges.add(edge)
        return edge

    def has_edge(self, x: int, y: int) -> bool:
        """Check whether ``x -- y`` is an edge."""
        return _edge(x, y) in self.edges

    def sorted_edges(self) -> list[Edge]:
        """Return the edges in ascending index order."""
        return sorted(self.edges)

    def labelled_edges(self) -> list[tuple[str, str]]:
        """Return the edges as label pairs in ascending index order."""
        return [(self.labels[x], self.labels[y]) for x, y in self.sorted_edges()]


class UnionFind:
    """Disjoint sets with path halving and union by size."""

    def __init__(self, items: Iterable[int]) -> None:
        """Start with every item in its own set."""
        self.parent = {item: item for item in items}
        self.size = dict.fromkeys(self.parent, 1)
        self.count = len(self.parent)

    def find(self, item: int) -> int:
        """Return the representative of ``item``."""
        parent = self.parent
        while parent[item] != item:
            parent[item] = parent[parent[item]]
            item = parent[item]
        return item

    def union(self, a: int, b: int) -> bool:
        """Merge the sets of ``a`` and ``b``; return False if already merged."""
        root_a, root_b = self.find(a), self.find(b)
        if root_a == root_b:
            return False
        if self.size[root_a] < self.size[root_b]:
            root_a, root_b = root_b, root_a
        self.parent[root_b] = root_a
        self.size[root_a] += self.size[root_b]
        self.count -= 1
        return True

    def connected(self, a: int, b: int) -> bool:
        """Check whether ``a`` and ``b`` share a set."""
        return self.find(a) == self.find(b)


@dataclass(frozen=True)
class TraceStep:
    """One edge added by the greedy run."""

    edge: Edge
    iteration: int
    # None for edges forced by two-positive states
    score: float | None = None
    forced: bool = False
    fallback: bool = False


@dataclass
class InferenceTrace:
    """Ordered record of every edge the greedy run added."""

    steps: list[TraceStep] = field(default_factory=list)
    satisfied: bool = False


def _induced_union_find(graph: PathGraph, vset: Iterable[int]) -> UnionFind:
    vertices = sorted(set(vset))
    for vertex in vertices:
        graph.check_vertex(vertex)
    uf = UnionFind(vertices)
    inside = set(vertices)
    for x, y in graph.edges:
        if x in inside and y in inside:
            uf.union(x, y)
    return uf


def components_within(graph: PathGraph, vset: Iterable[int]) -> int:
    """Count connected components of the subgraph induced on ``vset``.

    Raises:
        DimensionError: If a vertex is out of range.

    """
    return _induced_union_find(graph, vset).count


def _check_dimensions(sm: StateMatrix, graph: PathGraph) -> None:
    if sm.n_vars != graph.n_vars:
        raise DimensionError(
            f"State matrix has {sm.n_vars} variables, graph has {graph.n_vars}"
        )


def _positive_sets(sm: StateMatrix) -> list[tuple[tuple[int, ...], float]]:
    """Return (positives, probability) for states with at least two positives."""
    return [
        (state.positives(), float(p))
        for state, p in zip(sm.states, sm.probs, strict=True)
        if state.positive_count() >= 2
    ]


def edge_score(x: int, y: int, sm: StateMatrix, graph: PathGraph) -> float:
    """Return W(x, y) for a pair of vertices with no path between them.

    Every state whose positives include both vertices contributes its
    probability divided by the component count of its induced subgraph.

    Raises:
        ContractViolationError: If ``x == y`` or the vertices are connected.
        DimensionError: On mismatched dimensions or out-of-range vertices.

    """
    _check_dimensions(sm, graph)
    graph.check_vertex(x)
    graph.check_vertex(y)
    if x == y:
        raise ContractViolationError(f"Edge score needs distinct vertices, got {x}")
    if _induced_union_find(graph, range(graph.n_vars)).connected(x, y):
        raise ContractViolationError(
            f"Vertices {graph.labels[x]} and {graph.labels[y]} are already connected"
        )
    score = 0.0
    for positives, p in _positive_sets(sm):
        if x in positives and y in positives:
            score += p / components_within(graph, positives)
    return score


def is_satisfied(graph: PathGraph, sm: StateMatrix) -> bool:
    """Check that every state's positives induce a connected subgraph."""
    _check_dimensions(sm, graph)
    return all(
        components_within(graph, positives) <= 1
        for positives, _ in _positive_sets(sm)
    )


def _pair_scores(
    states: Sequence[tuple[tuple[int, ...], float]],
    graph: PathGraph,
    *,
    within_state: bool,
) -> dict[Edge, float]:
    """Score candidate pairs of the current iteration.

    With ``within_state`` False only globally disconnected pairs are scored.
    Otherwise any pair split across components of some state's induced
    subgraph is scored, counting only the states that split it.
    """
    global_uf = _induced_union_find(graph, range(graph.n_vars))
    scores: dict[Edge, float] = defaultdict(float)
    for positives, p in states:
        local = _induced_union_find(graph, positives)
        if local.count <= 1:
            continue
        weight = p / local.count
        for x, y in combinations(positives, 2):
            if local.connected(x, y):
                continue
            if not within_state and global_uf.connected(x, y):
                continue
            scores[(x, y)] += weight
    return scores


def _best_pair(scores: dict[Edge, float]) -> tuple[Edge, float]:
    best = max(scores.values())
    threshold = best - abs(best) * SCORE_TIE_TOLERANCE
    edge = min(pair for pair, score in scores.items() if score >= threshold)
    return edge, scores[edge]


def greedy_infer(sm: StateMatrix) -> tuple[PathGraph, InferenceTrace]:
    """Build the pathway graph with the fewest edges the greedy rule finds.

    States with exactly two positives force their edge first. Then, one edge
    per iteration, the globally disconnected pair with the highest score is
    joined, ties going to the smallest index pair, until every state's
    positives are connected. If unsatisfied states remain but every
    co-occurring pair is already joined elsewhere in the graph, pairs split
    only within a state's induced subgraph are scored instead.

    Args:
        sm: Pruned state matrix.

    Returns:
        The inferred graph and the trace of added edges.

    """
    graph = PathGraph(sm.labels)
    trace = InferenceTrace()
    states = _positive_sets(sm)

    forced = sorted({_edge(*positives) for positives, _ in states if len(positives) == 2})
    for x, y in forced:
        graph.add_edge(x, y)
        trace.steps.append(TraceStep(edge=(x, y), iteration=0, forced=True))
    if forced:
        LOGGER.debug("Added %d forced edges", len(forced))

    iteration = 0
    while True:
        scores = _pair_scores(states, graph, within_state=False)
        fallback = False
        if not scores:
            scores = _pair_scores(states, graph, within_state=True)
            if not scores:
                break
            fallback = True
            LOGGER.debug(
                "No globally disconnected pair left at iteration %d; "
                "scoring pairs split within states",
                iteration + 1,
            )
        iteration += 1
        edge, score = _best_pair(scores)
        graph.add_edge(*edge)
        trace.steps.append(
            TraceStep(edge=edge, iteration=iteration, score=score, fallback=fallback)
        )
        LOGGER.debug(
            "Iteration %d: added %s -- %s (W=%.6g)",
            iteration,
            graph.labels[edge[0]],
            graph.labels[edge[1]],
            score,
        )

    trace.satisfied = is_satisfied(graph, sm)
    LOGGER.info(
        "Inferred %d edges (%d forced) over %d states",
        len(graph.edges),
        len(forced),
        len(sm),
    )
    return graph, trace


def minimum_edge_graph(sm: StateMatrix) -> PathGraph:
    """Return a satisfying graph with the fewest possible edges.

    Exhaustive search over subsets of the pairs co-occurring in some state,
    by increasing size. Intended for auditing small instances.

    Raises:
        ConfigurationError: If there are more than ``MAX_EXHAUSTIVE_VARS``
            variables.

    """
    if sm.n_vars > MAX_EXHAUSTIVE_VARS:
        raise ConfigurationError(
            f"Exhaustive search supports at most {MAX_EXHAUSTIVE_VARS} variables, "
            f"got {sm.n_vars}"
        )
    states = _positive_sets(sm)
    pairs = sorted(
        {pair for positives, _ in states for pair in combinations(positives, 2)}
    )
    lower = max((len(positives) - 1 for positives, _ in states), default=0)
    for size in range(lower, len(pairs) + 1):
        for subset in combinations(pairs, size):
            graph = PathGraph(sm.labels, set(subset))
            if is_satisfied(graph, sm):
                return graph
    # the full pair set always satisfies every state
    raise AssertionError("unreachable")
