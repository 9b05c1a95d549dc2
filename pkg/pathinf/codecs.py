"""File formats: observation CSV, JSON documents, DOT and run manifests."""

from __future__ import annotations

from collections.abc import Iterable, Mapping, Sequence
import csv
from dataclasses import asdict, dataclass, field
import hashlib
import json
from pathlib import Path
import re
from typing import Any

import voluptuous as vol

from .const import LOGGER, MISSING, MISSING_TOKEN, MISSING_TOKENS, NEGATIVE, POSITIVE
from .exceptions import ParseError, PathInfError
from .infer import InferenceTrace, PathGraph
from .observations import ObservationMatrix, State
from .simulate import GroundTruthDag
from .summarize import MissingnessPrior, StateMatrix, SummaryDistribution

_TOKENS = {"1": POSITIVE, "0": NEGATIVE, **dict.fromkeys(MISSING_TOKENS, MISSING)}
_CELLS = {POSITIVE: "1", NEGATIVE: "0", MISSING: MISSING_TOKEN}

_DOT_ID = re.compile(r"^(?:[A-Za-z_][A-Za-z0-9_]*|-?(?:\.[0-9]+|[0-9]+(?:\.[0-9]*)?))$")
_DOT_KEYWORDS = {"node", "edge", "graph", "digraph", "subgraph", "strict"}

# Allowed drift of stored probabilities from summing to one
PROBABILITY_SUM_TOLERANCE = 1e-6


def json_pointer(path: Iterable[Any]) -> str:
    """Return the JSON pointer of a voluptuous error path."""
    parts = [str(part).replace("~", "~0").replace("/", "~1") for part in path]
    return "/" + "/".join(parts) if parts else "/"


def _schema_error(source: Path, err: vol.Invalid) -> ParseError:
    if isinstance(err, vol.MultipleInvalid):
        err = err.errors[0]
    return ParseError(f"{source}: {json_pointer(err.path)}: {err.msg}")


def _load_json(path: Path) -> Any:
    try:
        return json.loads(path.read_text(encoding="utf-8"))
    except OSError as err:
        raise ParseError(f"Cannot read {path}: {err}") from err
    except json.JSONDecodeError as err:
        raise ParseError(
            f"{path}: invalid JSON at line {err.lineno} column {err.colno}"
        ) from err


def write_json(path: str | Path, document: Any) -> Path:
    """Write ``document`` as indented JSON with a trailing newline."""
    path = Path(path)
    path.write_text(json.dumps(document, indent=2) + "\n", encoding="utf-8")
    LOGGER.debug("Wrote %s", path)
    return path


def read_observations(path: str | Path) -> ObservationMatrix:
    """Read an observation CSV with a header row of variable labels.

    Cells are ``1``, ``0``, ``NA`` or ``?``; blank lines are skipped.

    Raises:
        ParseError: Naming the line and column of the first bad cell.

    """
    path = Path(path)
    try:
        with path.open(newline="", encoding="utf-8") as handle:
            lines = list(csv.reader(handle))
    except OSError as err:
        raise ParseError(f"Cannot read {path}: {err}") from err
    except csv.Error as err:
        raise ParseError(f"{path}: malformed CSV: {err}") from err

    numbered = [(n, row) for n, row in enumerate(lines, start=1) if any(row)]
    if not numbered:
        raise ParseError(f"{path}: file is empty")
    _, header = numbered[0]
    labels = tuple(label.strip() for label in header)

    rows: list[list[int]] = []
    for lineno, raw in numbered[1:]:
        if len(raw) != len(labels):
            raise ParseError(
                f"{path}: line {lineno}: expected {len(labels)} cells, got {len(raw)}"
            )
        row = []
        for column, token in enumerate(raw, start=1):
            code = _TOKENS.get(token.strip())
            if code is None:
                raise ParseError(
                    f"{path}: line {lineno}, column {column} "
                    f"({labels[column - 1]}): invalid token {token!r}"
                )
            row.append(code)
        rows.append(row)
    if not rows:
        raise ParseError(f"{path}: no data rows")

    try:
        obs = ObservationMatrix.from_rows(labels, rows)
    except PathInfError as err:
        raise ParseError(f"{path}: {err}") from err
    for index, label in enumerate(obs.labels):
        if (obs.rows[:, index] == MISSING).all():
            LOGGER.warning("Column %s has no observed values", label)
    LOGGER.info("Read %d rows of %d variables from %s", obs.n_rows, obs.n_vars, path)
    return obs


def write_observations(path: str | Path, obs: ObservationMatrix) -> Path:
    """Write ``obs`` as CSV, missing entries as ``NA``."""
    path = Path(path)
    with path.open("w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(obs.labels)
        writer.writerows([_CELLS[int(v)] for v in row] for row in obs.rows)
    LOGGER.debug("Wrote %s", path)
    return path


def write_rows(path: str | Path, rows: Iterable[Sequence[Any]]) -> Path:
    """Write plain CSV rows."""
    path = Path(path)
    with path.open("w", newline="", encoding="utf-8") as handle:
        csv.writer(handle, lineterminator="\n").writerows(rows)
    return path


STATE_MATRIX_SCHEMA = vol.Schema(
    {
        vol.Required("labels"): vol.All([str], vol.Length(min=1)),
        vol.Required("states"): vol.All(
            {str: vol.All(vol.Coerce(float), vol.Range(min=0, min_included=False))},
            vol.Length(min=1),
        ),
    },
    extra=vol.ALLOW_EXTRA,
)


def state_matrix_document(
    sm: StateMatrix,
    dist: SummaryDistribution | None = None,
    prior: MissingnessPrior | None = None,
) -> dict[str, Any]:
    """Return the JSON document of a state matrix and its fit."""
    document: dict[str, Any] = {"labels": list(sm.labels), "states": sm.as_dict()}
    if dist is not None:
        document["objective"] = dist.objective
        document["solver"] = {"iters": dist.iterations, "converged": dist.converged}
    if prior is not None:
        document["prior"] = asdict(prior)
    return document


def read_state_matrix(path: str | Path) -> StateMatrix:
    """Read a state matrix JSON document.

    Raises:
        ParseError: With the JSON pointer of the offending value.

    """
    path = Path(path)
    try:
        document = STATE_MATRIX_SCHEMA(_load_json(path))
    except vol.Invalid as err:
        raise _schema_error(path, err) from err
    labels = document["labels"]
    states = document["states"]
    for key in states:
        if len(key) != len(labels) or set(key) - {"0", "1"}:
            raise ParseError(
                f"{path}: {json_pointer(['states', key])}: expected a "
                f"{len(labels)}-character 0/1 string"
            )
    total = sum(states.values())
    if abs(total - 1.0) > PROBABILITY_SUM_TOLERANCE:
        raise ParseError(f"{path}: /states: probabilities sum to {total}, expected 1")
    try:
        return StateMatrix(
            tuple(labels),
            tuple(State.from_string(key) for key in states),
            [value / total for value in states.values()],
        )
    except PathInfError as err:
        raise ParseError(f"{path}: {err}") from err


GRAPH_SCHEMA = vol.Schema(
    {
        vol.Required("labels"): vol.All([str], vol.Length(min=1)),
        vol.Required("edges"): [
            vol.All([vol.Coerce(int)], vol.Length(min=2, max=2))
        ],
    },
    extra=vol.ALLOW_EXTRA,
)


def graph_document(
    graph: PathGraph, trace: InferenceTrace | None = None
) -> dict[str, Any]:
    """Return the JSON document of an inferred graph."""
    document: dict[str, Any] = {
        "labels": list(graph.labels),
        "edges": [list(edge) for edge in graph.sorted_edges()],
    }
    if trace is not None:
        document["trace"] = [
            {
                "edge": list(step.edge),
                "iteration": step.iteration,
                "score": step.score,
                "forced": step.forced,
                "fallback": step.fallback,
            }
            for step in trace.steps
        ]
        document["satisfied"] = trace.satisfied
    return document


def read_graph(path: str | Path) -> PathGraph:
    """Read a graph JSON document.

    Raises:
        ParseError: With the JSON pointer of the offending value.

    """
    path = Path(path)
    try:
        document = GRAPH_SCHEMA(_load_json(path))
    except vol.Invalid as err:
        raise _schema_error(path, err) from err
    graph = PathGraph(tuple(document["labels"]))
    for index, (x, y) in enumerate(document["edges"]):
        try:
            graph.add_edge(x, y)
        except PathInfError as err:
            raise ParseError(f"{path}: {json_pointer(['edges', index])}: {err}") from err
    return graph


def _dot_id(label: str) -> str:
    if _DOT_ID.match(label) and label.lower() not in _DOT_KEYWORDS:
        return label
    return '"' + label.replace("\\", "\\\\").replace('"', '\\"') + '"'


def render_dot(graph: PathGraph, trace: InferenceTrace | None = None) -> str:
    """Render an undirected DOT graph; trace scores become edge comments."""
    steps = {step.edge: step for step in trace.steps} if trace else {}
    lines = ["graph pathinf {"]
    lines.extend(f"  {_dot_id(label)};" for label in graph.labels)
    for x, y in graph.sorted_edges():
        line = f"  {_dot_id(graph.labels[x])} -- {_dot_id(graph.labels[y])};"
        step = steps.get((x, y))
        if step is not None and step.forced:
            line += "  // forced"
        elif step is not None and step.score is not None:
            line += f"  // W={step.score:.6g}"
        lines.append(line)
    lines.append("}")
    return "\n".join(lines) + "\n"


GROUND_TRUTH_SCHEMA = vol.Schema(
    {
        vol.Required("nodes"): vol.All([str], vol.Length(min=1)),
        vol.Required("edges"): [
            vol.Schema(
                {
                    vol.Required("from"): str,
                    vol.Required("to"): str,
                    vol.Required("weight"): vol.All(
                        vol.Coerce(float), vol.Range(min=0, min_included=False)
                    ),
                }
            )
        ],
        vol.Optional("metadata", default=dict): dict,
    },
    extra=vol.ALLOW_EXTRA,
)


def ground_truth_document(dag: GroundTruthDag) -> dict[str, Any]:
    """Return the JSON document of a ground-truth DAG."""
    return {
        "nodes": list(dag.labels),
        "edges": [
            {"from": dag.labels[a], "to": dag.labels[b], "weight": w}
            for (a, b), w in dag.weights.items()
        ],
        "metadata": dict(dag.metadata),
    }


def read_ground_truth(path: str | Path) -> GroundTruthDag:
    """Read a ground-truth DAG JSON document.

    Raises:
        ParseError: On schema violations, unknown nodes or a cycle.

    """
    path = Path(path)
    try:
        document = GROUND_TRUTH_SCHEMA(_load_json(path))
    except vol.Invalid as err:
        raise _schema_error(path, err) from err
    index = {label: i for i, label in enumerate(document["nodes"])}
    weights: dict[tuple[int, int], float] = {}
    for k, edge in enumerate(document["edges"]):
        for end in ("from", "to"):
            if edge[end] not in index:
                raise ParseError(
                    f"{path}: {json_pointer(['edges', k, end])}: "
                    f"unknown node {edge[end]!r}"
                )
        weights[(index[edge["from"]], index[edge["to"]])] = edge["weight"]
    try:
        return GroundTruthDag(tuple(document["nodes"]), weights, document["metadata"])
    except PathInfError as err:
        raise ParseError(f"{path}: /edges: {err}") from err


def sha256_of(path: str | Path) -> str:
    """Return the hex SHA-256 digest of a file."""
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


@dataclass
class RunManifest:
    """Everything needed to reproduce one CLI run."""

    version: str
    subcommand: str
    config: dict[str, Any]
    seed: int
    inputs: dict[str, str] = field(default_factory=dict)
    outputs: dict[str, dict[str, str]] = field(default_factory=dict)
    duration_seconds: float = 0.0

    def add_output(self, name: str, path: str | Path) -> None:
        """Record an output file with its digest."""
        self.outputs[name] = {"path": str(path), "sha256": sha256_of(path)}

    def write(self, path: str | Path) -> Path:
        """Write the manifest as JSON."""
        return write_json(path, asdict(self))
