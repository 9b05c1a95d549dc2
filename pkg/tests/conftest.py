"""Fixtures for PathInf tests."""

from __future__ import annotations

from collections.abc import Callable, Mapping, Sequence
from pathlib import Path

import numpy as np
import pytest

from pathinf.observations import ObservationMatrix
from pathinf.summarize import MissingnessPrior, StateMatrix

type StateMatrixFactory = Callable[[Sequence[str], Mapping[str, float]], StateMatrix]

TOY_CSV = "A,B\n" + "1,0\n" * 7 + "0,1\n" * 3


@pytest.fixture
def rng() -> np.random.Generator:
    """Return a seeded random generator."""
    return np.random.default_rng(20240601)


@pytest.fixture
def prior() -> MissingnessPrior:
    """Return the default missingness prior."""
    return MissingnessPrior()


@pytest.fixture
def make_state_matrix() -> StateMatrixFactory:
    """Return a factory building state matrices from ``{bitstring: p}``."""
    return StateMatrix.from_mapping


@pytest.fixture
def abc_labels() -> tuple[str, ...]:
    """Return three variable labels."""
    return ("a", "b", "c")


@pytest.fixture
def toy_observations() -> ObservationMatrix:
    """Return complete 2-variable data: seven ``1,0`` rows and three ``0,1``."""
    return ObservationMatrix.from_rows(("A", "B"), [[1, 0]] * 7 + [[0, 1]] * 3)


@pytest.fixture
def toy_csv(tmp_path: Path) -> Path:
    """Write the toy observations as CSV."""
    path = tmp_path / "toy.csv"
    path.write_text(TOY_CSV, encoding="utf-8")
    return path


@pytest.fixture
def nested_observations() -> ObservationMatrix:
    """Return rows ``1,0,1,?`` that both ``1010`` and ``1011`` explain."""
    return ObservationMatrix.from_rows(
        ("w", "x", "y", "z"), [[1, 0, 1, None]] * 40 + [[1, None, 1, None]] * 10
    )


@pytest.fixture
def two_state_observations() -> ObservationMatrix:
    """Return clean data drawn from the states ``110`` and ``011``."""
    return ObservationMatrix.from_rows(
        ("a", "b", "c"), [[1, 1, 0]] * 100 + [[0, 1, 1]] * 100
    )


@pytest.fixture
def random_observations() -> Callable[[np.random.Generator, int, int], ObservationMatrix]:
    """Return a factory of random observation matrices."""

    def factory(generator: np.random.Generator, n_vars: int, n_rows: int) -> ObservationMatrix:
        rows = generator.choice([1, 0, -1], size=(n_rows, n_vars))
        labels = tuple(f"V{i}" for i in range(n_vars))
        return ObservationMatrix(labels, rows)

    return factory
