"""Tests for the synthetic data generator."""

from __future__ import annotations

from collections import Counter
from itertools import combinations

import networkx as nx
import numpy as np
import pytest
from scipy.stats import chisquare

from pathinf.const import MISSING
from pathinf.exceptions import ConfigurationError
from pathinf.simulate import (
    GroundTruthDag,
    SimulationConfig,
    generate_dataset,
    inject_missing,
    max_edges,
    random_dag,
    sample_cascade,
)


class TestRandomDag:
    """Test DAG sampling."""

    def test_shape(self, rng: np.random.Generator) -> None:
        """Test node and edge counts and weight range."""
        dag = random_dag(7, 12, rng)
        assert dag.n_nodes == 7
        assert len(dag.edges) == 12
        assert nx.is_directed_acyclic_graph(dag.to_networkx())
        assert all(0 < w <= 1 for w in dag.weights.values())
        assert dag.labels == ("X0", "X1", "X2", "X3", "X4", "X5", "X6")

    def test_complete(self, rng: np.random.Generator) -> None:
        """Test the densest DAG is a tournament."""
        dag = random_dag(5, max_edges(5), rng)
        assert dag.skeleton() == set(combinations(range(5), 2))
        assert len(dag.sources) == 1

    def test_empty(self, rng: np.random.Generator) -> None:
        """Test zero edges leave every node a source."""
        dag = random_dag(3, 0, rng)
        assert dag.sources == (0, 1, 2)

    def test_infeasible(self, rng: np.random.Generator) -> None:
        """Test too many edges are rejected."""
        with pytest.raises(ConfigurationError, match="infeasible edge count"):
            random_dag(4, 7, rng)

    def test_uniform_skeletons(self) -> None:
        """Test every 3-edge skeleton on 4 nodes is equally likely."""
        counts = Counter(
            frozenset(random_dag(4, 3, np.random.default_rng(seed)).skeleton())
            for seed in range(1000)
        )
        assert len(counts) == 20
        observed = [counts[frozenset(s)] for s in combinations(combinations(range(4), 2), 3)]
        assert sum(observed) == 1000
        assert chisquare(observed).pvalue > 0.001

    def test_cycle_rejected(self) -> None:
        """Test a cyclic weight map is not a valid ground truth."""
        with pytest.raises(ConfigurationError, match="cycle"):
            GroundTruthDag(("a", "b"), {(0, 1): 0.5, (1, 0): 0.5})


class TestSampleCascade:
    """Test cascade sampling."""

    def test_zero_steps(self, rng: np.random.Generator) -> None:
        """Test a zero-step cascade marks its source only."""
        dag = GroundTruthDag(("a", "b"), {(0, 1): 1.0})
        np.testing.assert_array_equal(sample_cascade(dag, 4.0, rng, steps=0), [1, 0])

    def test_chain(self, rng: np.random.Generator) -> None:
        """Test a chain fills up one node per step."""
        dag = GroundTruthDag(("a", "b", "c"), {(0, 1): 0.3, (1, 2): 0.7})
        np.testing.assert_array_equal(sample_cascade(dag, 4.0, rng, steps=1), [1, 1, 0])
        np.testing.assert_array_equal(sample_cascade(dag, 4.0, rng, steps=5), [1, 1, 1])

    def test_fork_weights(self, rng: np.random.Generator) -> None:
        """Test children are picked in proportion to edge weight."""
        dag = GroundTruthDag(("a", "b", "c"), {(0, 1): 0.9, (0, 2): 0.1})
        hits = sum(int(sample_cascade(dag, 4.0, rng, steps=1)[1]) for _ in range(10000))
        assert hits / 10000 == pytest.approx(0.9, abs=0.01)

    def test_positives_reachable(self, rng: np.random.Generator) -> None:
        """Test every positive node is a source or has a positive parent."""
        dag = random_dag(10, 15, rng)
        graph = dag.to_networkx()
        for _ in range(200):
            sample = sample_cascade(dag, 4.0, rng)
            positive = set(np.flatnonzero(sample).tolist())
            assert len(positive & set(dag.sources)) == 1
            for node in positive - set(dag.sources):
                assert positive & set(graph.predecessors(node))


class TestInjectMissing:
    """Test missingness injection."""

    def test_no_missing(self, rng: np.random.Generator) -> None:
        """Test zero probabilities keep the sample."""
        sample = np.array([1, 0, 1, 0], dtype=np.int8)
        np.testing.assert_array_equal(inject_missing(sample, 0.0, 0.0, rng), sample)

    def test_all_missing(self, rng: np.random.Generator) -> None:
        """Test unit probabilities hide everything."""
        result = inject_missing([1, 0, 1], 1.0, 1.0, rng)
        assert (result == MISSING).all()

    def test_rate(self, rng: np.random.Generator) -> None:
        """Test hidden positives follow the requested rate."""
        result = inject_missing(np.ones(1000, dtype=np.int8), 0.4, 0.0, rng)
        assert abs(int((result == MISSING).sum()) - 400) < 45

    def test_only_negatives(self, rng: np.random.Generator) -> None:
        """Test the negative rate leaves positives alone."""
        result = inject_missing([1, 1, 0, 0], 0.0, 1.0, rng)
        np.testing.assert_array_equal(result, [1, 1, MISSING, MISSING])

    def test_invalid(self, rng: np.random.Generator) -> None:
        """Test probabilities outside the unit interval are rejected."""
        with pytest.raises(ConfigurationError, match="p_miss_neg"):
            inject_missing([1], 0.1, 1.5, rng)


class TestGenerateDataset:
    """Test full dataset generation."""

    def test_defaults(self) -> None:
        """Test the default configuration shape."""
        obs, dag = generate_dataset(SimulationConfig())
        assert obs.rows.shape == (1000, 10)
        assert len(dag.edges) == 15
        assert (obs.rows != 0).any(axis=1).all()
        assert dag.metadata["config"]["seed"] == SimulationConfig().seed

    def test_deterministic(self) -> None:
        """Test the same seed reproduces the data."""
        cfg = SimulationConfig(n_nodes=6, n_edges=8, n_samples=50, seed=11)
        first, first_dag = generate_dataset(cfg)
        second, second_dag = generate_dataset(cfg)
        assert first == second
        assert first_dag.weights == second_dag.weights

    def test_workers_do_not_matter(self) -> None:
        """Test threaded generation matches serial generation."""
        cfg = SimulationConfig(n_nodes=6, n_edges=8, n_samples=80, seed=3)
        assert generate_dataset(cfg)[0] == generate_dataset(cfg, workers=8)[0]

    def test_seeds_differ(self) -> None:
        """Test different seeds give different data."""
        first = generate_dataset(SimulationConfig(n_samples=50, seed=1))[0]
        second = generate_dataset(SimulationConfig(n_samples=50, seed=2))[0]
        assert first != second

    def test_without_missingness(self) -> None:
        """Test zero missingness leaves only 0/1 entries."""
        cfg = SimulationConfig(n_samples=100, p_miss_pos=0.0, p_miss_neg=0.0)
        obs, _ = generate_dataset(cfg)
        assert set(np.unique(obs.rows).tolist()) <= {0, 1}

    @pytest.mark.parametrize(
        ("kwargs", "match"),
        [
            ({"n_nodes": 7, "n_edges": 26}, "infeasible edge count"),
            ({"n_samples": 0}, "n_samples"),
            ({"poisson_lambda": 0.0}, "poisson_lambda"),
            ({"p_miss_pos": 0.5}, "p_miss_pos"),
            ({"p_miss_neg": -0.1}, "p_miss_neg"),
        ],
    )
    def test_invalid_config(self, kwargs: dict[str, float], match: str) -> None:
        """Test infeasible configurations are rejected."""
        with pytest.raises(ConfigurationError, match=match):
            SimulationConfig(**kwargs)
