"""Observation matrix and binary state types."""

from __future__ import annotations

from collections.abc import Iterable, Sequence
from dataclasses import dataclass
from typing import Any, NamedTuple

import numpy as np

from .const import MISSING, NEGATIVE, POSITIVE
from .exceptions import DimensionError

# States are stored as integers in int64 arrays; the top bit is reserved
MAX_STATE_WIDTH = 62


def bit_weights(width: int) -> np.ndarray:
    """Return the integer weight of each variable's bit.

    Variable 0 is the most significant bit, so the 0/1 string of a state reads
    in label order and ascending integer order equals ascending string order.
    """
    if width > MAX_STATE_WIDTH:
        raise DimensionError(
            f"{width} variables exceed the supported state width of {MAX_STATE_WIDTH}"
        )
    return np.left_shift(np.int64(1), np.arange(width - 1, -1, -1, dtype=np.int64))


@dataclass(frozen=True, order=True)
class State:
    """One complete binary assignment to all variables."""

    bits: int
    width: int

    def __post_init__(self) -> None:
        """Validate the bit pattern fits the width."""
        if self.width < 1:
            raise DimensionError(f"State width must be positive, got {self.width}")
        if self.bits < 0 or self.bits >= 1 << self.width:
            raise DimensionError(
                f"State value {self.bits} does not fit in {self.width} bits"
            )

    @classmethod
    def from_string(cls, text: str) -> State:
        """Build a state from a fixed-width 0/1 string in label order."""
        if not text or set(text) - {"0", "1"}:
            raise DimensionError(f"Invalid state string {text!r}")
        return cls(int(text, 2), len(text))

    @classmethod
    def from_vector(cls, values: Iterable[int]) -> State:
        """Build a state from a sequence of 0/1 values in label order."""
        vector = [int(v) for v in values]
        if any(v not in (0, 1) for v in vector):
            raise DimensionError(f"State vector must be binary, got {vector}")
        return cls.from_string("".join(str(v) for v in vector))

    def bit(self, index: int) -> int:
        """Return the 0/1 value of variable ``index``."""
        if not 0 <= index < self.width:
            raise DimensionError(f"Variable index {index} out of range")
        return (self.bits >> (self.width - 1 - index)) & 1

    def positives(self) -> tuple[int, ...]:
        """Return the indices of the positive variables."""
        return tuple(i for i in range(self.width) if self.bit(i))

    def positive_count(self) -> int:
        """Return the number of positive variables."""
        return self.bits.bit_count()

    def to_string(self) -> str:
        """Return the fixed-width 0/1 string in label order."""
        return format(self.bits, f"0{self.width}b")

    def to_vector(self) -> np.ndarray:
        """Return the state as a 0/1 vector in label order."""
        return np.array([self.bit(i) for i in range(self.width)], dtype=np.int8)

    def __str__(self) -> str:
        """Return the 0/1 string."""
        return self.to_string()


class RowAggregate(NamedTuple):
    """Distinct observation rows with their multiplicities."""

    patterns: np.ndarray
    # pattern index of every original row
    inverse: np.ndarray
    counts: np.ndarray


def _coerce_cell(value: Any) -> int:
    if value is None:
        return MISSING
    if isinstance(value, (bool, np.bool_)):
        return POSITIVE if value else NEGATIVE
    code = int(value)
    if code not in (POSITIVE, NEGATIVE, MISSING):
        raise DimensionError(f"Invalid observation value {value!r}")
    return code


@dataclass(frozen=True, eq=False)
class ObservationMatrix:
    """Binary observations with missing values.

    Rows hold one code per variable: ``POSITIVE`` (1), ``NEGATIVE`` (0) or
    ``MISSING`` (-1). The array is stored read-only.
    """

    labels: tuple[str, ...]
    rows: np.ndarray

    def __post_init__(self) -> None:
        """Validate labels and row shape."""
        labels = tuple(self.labels)
        if not labels:
            raise DimensionError("Observation matrix needs at least one variable")
        if any(not isinstance(label, str) or not label for label in labels):
            raise DimensionError("Variable labels must be non-empty strings")
        if len(set(labels)) != len(labels):
            raise DimensionError(f"Variable labels must be unique: {labels}")

        rows = np.array(self.rows, dtype=np.int8, copy=True)
        if rows.ndim != 2:
            raise DimensionError(f"Rows must form a 2-D array, got {rows.ndim}-D")
        if rows.shape[0] < 1:
            raise DimensionError("Observation matrix needs at least one row")
        if rows.shape[1] != len(labels):
            raise DimensionError(
                f"Rows have {rows.shape[1]} entries but there are {len(labels)} labels"
            )
        if not np.isin(rows, (POSITIVE, NEGATIVE, MISSING)).all():
            raise DimensionError("Rows may only contain 1, 0 or missing")
        rows.setflags(write=False)

        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "rows", rows)

    @classmethod
    def from_rows(
        cls, labels: Sequence[str], rows: Iterable[Iterable[Any]]
    ) -> ObservationMatrix:
        """Build a matrix from rows of 1/0 values with ``None`` marking missing.

        Args:
            labels: Variable names in column order.
            rows: Iterable of rows; ``None`` or -1 mark missing entries.

        Returns:
            The validated observation matrix.

        """
        data = [[_coerce_cell(value) for value in row] for row in rows]
        width = len(labels)
        for index, row in enumerate(data):
            if len(row) != width:
                raise DimensionError(
                    f"Row {index} has {len(row)} entries, expected {width}"
                )
        return cls(tuple(labels), np.array(data, dtype=np.int8).reshape(-1, width))

    @property
    def n_vars(self) -> int:
        """Return the number of variables."""
        return len(self.labels)

    @property
    def n_rows(self) -> int:
        """Return the number of observation rows."""
        return int(self.rows.shape[0])

    def missing_count(self, index: int) -> int:
        """Return the number of missing entries in row ``index``."""
        return int(np.count_nonzero(self.rows[index] == MISSING))

    def aggregate(self) -> RowAggregate:
        """Collapse duplicate rows into distinct patterns with multiplicities."""
        patterns, inverse, counts = np.unique(
            self.rows, axis=0, return_inverse=True, return_counts=True
        )
        return RowAggregate(
            patterns=patterns,
            inverse=inverse.reshape(-1).astype(np.int64),
            counts=counts.astype(np.int64),
        )

    def select_variables(self, labels: Sequence[str]) -> ObservationMatrix:
        """Return a matrix restricted to ``labels``, in the given order."""
        index = {label: i for i, label in enumerate(self.labels)}
        unknown = [label for label in labels if label not in index]
        if unknown:
            raise DimensionError(f"Unknown variables: {', '.join(unknown)}")
        columns = [index[label] for label in labels]
        return ObservationMatrix(tuple(labels), self.rows[:, columns])

    def select_rows(self, indices: Sequence[int] | np.ndarray) -> ObservationMatrix:
        """Return a matrix with the given rows, in the given order."""
        picked = np.asarray(indices, dtype=np.int64)
        if picked.size == 0:
            raise DimensionError("Row selection is empty")
        if picked.min() < 0 or picked.max() >= self.n_rows:
            raise DimensionError("Row selection out of range")
        return ObservationMatrix(self.labels, self.rows[picked])

    def __eq__(self, other: object) -> bool:
        """Compare labels and cell values."""
        if not isinstance(other, ObservationMatrix):
            return NotImplemented
        return self.labels == other.labels and np.array_equal(self.rows, other.rows)

    def __hash__(self) -> int:
        """Hash labels and cell values."""
        return hash((self.labels, self.rows.tobytes()))
