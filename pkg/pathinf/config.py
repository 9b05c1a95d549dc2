"""Option schemas and config-file loading."""

from __future__ import annotations

from collections.abc import Callable, Mapping, Sequence
import json
from pathlib import Path
from typing import Any

import voluptuous as vol

from .const import (
    CONF_CANDIDATE_CAP,
    CONF_COLUMNS,
    CONF_EDGES_GRID,
    CONF_EPS_PRUNE,
    CONF_FRACTION,
    CONF_INIT,
    CONF_MAX_ITERS,
    CONF_N_EDGES,
    CONF_N_NODES,
    CONF_N_SAMPLES,
    CONF_P_GRID,
    CONF_P_MISS_NEG,
    CONF_P_MISS_POS,
    CONF_POISSON_LAMBDA,
    CONF_REPEATS,
    CONF_SEED,
    CONF_THREADS,
    CONF_TOL,
    DEFAULT_CANDIDATE_CAP,
    DEFAULT_EPS_PRUNE,
    DEFAULT_FRACTION,
    DEFAULT_INIT,
    DEFAULT_MAX_ITERS,
    DEFAULT_N_EDGES,
    DEFAULT_N_NODES,
    DEFAULT_N_SAMPLES,
    DEFAULT_P_MISS_NEG,
    DEFAULT_P_MISS_POS,
    DEFAULT_POISSON_LAMBDA,
    DEFAULT_REPEATS,
    DEFAULT_SEED,
    DEFAULT_SWEEP_REPEATS,
    DEFAULT_THREADS,
    DEFAULT_TOL,
    EDGE_COUNT_OPTIONS,
    INIT_OPTIONS,
    P_MISS_POS_OPTIONS,
)
from .exceptions import ConfigurationError, ParseError
from .pipeline import PipelineConfig
from .simulate import SimulationConfig
from .summarize import MissingnessPrior, SolverOptions


def _split(value: Any) -> list[Any]:
    if isinstance(value, str):
        return [item.strip() for item in value.split(",") if item.strip()]
    if isinstance(value, (list, tuple)):
        return list(value)
    raise vol.Invalid("expected a comma-separated list")


def _list_of(coerce: Callable[[Any], Any]) -> Callable[[Any], list[Any]]:
    def validator(value: Any) -> list[Any]:
        items = _split(value)
        if not items:
            raise vol.Invalid("expected at least one value")
        try:
            return [coerce(item) for item in items]
        except (TypeError, ValueError) as err:
            raise vol.Invalid(f"invalid list entry: {err}") from err

    return validator


def _run_fields(d: Mapping[str, Any]) -> dict[vol.Marker, Any]:
    return {
        vol.Required(CONF_SEED, default=d.get(CONF_SEED, DEFAULT_SEED)): vol.All(
            vol.Coerce(int), vol.Range(min=0)
        ),
        vol.Required(
            CONF_THREADS, default=d.get(CONF_THREADS, DEFAULT_THREADS)
        ): vol.All(vol.Coerce(int), vol.Range(min=1)),
    }


def _solver_fields(d: Mapping[str, Any]) -> dict[vol.Marker, Any]:
    return {
        vol.Required(CONF_TOL, default=d.get(CONF_TOL, DEFAULT_TOL)): vol.All(
            vol.Coerce(float), vol.Range(min=0, min_included=False)
        ),
        vol.Required(
            CONF_MAX_ITERS, default=d.get(CONF_MAX_ITERS, DEFAULT_MAX_ITERS)
        ): vol.All(vol.Coerce(int), vol.Range(min=1)),
        vol.Required(CONF_INIT, default=d.get(CONF_INIT, DEFAULT_INIT)): vol.In(
            INIT_OPTIONS
        ),
        vol.Required(
            CONF_EPS_PRUNE, default=d.get(CONF_EPS_PRUNE, DEFAULT_EPS_PRUNE)
        ): vol.All(vol.Coerce(float), vol.Range(min=0, max=1, max_included=False)),
        vol.Required(
            CONF_CANDIDATE_CAP,
            default=d.get(CONF_CANDIDATE_CAP, DEFAULT_CANDIDATE_CAP),
        ): vol.All(vol.Coerce(int), vol.Range(min=1)),
    }


def _prior_fields(d: Mapping[str, Any]) -> dict[vol.Marker, Any]:
    return {
        vol.Required(
            CONF_P_MISS_POS, default=d.get(CONF_P_MISS_POS, DEFAULT_P_MISS_POS)
        ): vol.All(
            vol.Coerce(float),
            vol.Range(min=0, max=0.5, min_included=False, max_included=False),
        ),
        vol.Required(
            CONF_P_MISS_NEG, default=d.get(CONF_P_MISS_NEG, DEFAULT_P_MISS_NEG)
        ): vol.All(
            vol.Coerce(float),
            vol.Range(min=0, max=1, min_included=False, max_included=False),
        ),
    }


def _columns_fields(d: Mapping[str, Any]) -> dict[vol.Marker, Any]:
    return {
        vol.Required(CONF_COLUMNS, default=d.get(CONF_COLUMNS)): vol.Any(
            None, _list_of(str)
        ),
    }


def _simulation_fields(d: Mapping[str, Any]) -> dict[vol.Marker, Any]:
    return {
        vol.Required(
            CONF_N_NODES, default=d.get(CONF_N_NODES, DEFAULT_N_NODES)
        ): vol.All(vol.Coerce(int), vol.Range(min=1)),
        vol.Required(
            CONF_N_EDGES, default=d.get(CONF_N_EDGES, DEFAULT_N_EDGES)
        ): vol.All(vol.Coerce(int), vol.Range(min=0)),
        vol.Required(
            CONF_N_SAMPLES, default=d.get(CONF_N_SAMPLES, DEFAULT_N_SAMPLES)
        ): vol.All(vol.Coerce(int), vol.Range(min=1)),
        vol.Required(
            CONF_POISSON_LAMBDA,
            default=d.get(CONF_POISSON_LAMBDA, DEFAULT_POISSON_LAMBDA),
        ): vol.All(vol.Coerce(float), vol.Range(min=0, min_included=False)),
        vol.Required(
            CONF_P_MISS_POS, default=d.get(CONF_P_MISS_POS, DEFAULT_P_MISS_POS)
        ): vol.All(
            vol.Coerce(float), vol.Range(min=0, max=0.5, max_included=False)
        ),
        vol.Required(
            CONF_P_MISS_NEG, default=d.get(CONF_P_MISS_NEG, DEFAULT_P_MISS_NEG)
        ): vol.All(vol.Coerce(float), vol.Range(min=0, max=1)),
    }


def _crossval_fields(d: Mapping[str, Any]) -> dict[vol.Marker, Any]:
    return {
        vol.Required(
            CONF_FRACTION, default=d.get(CONF_FRACTION, DEFAULT_FRACTION)
        ): vol.All(vol.Coerce(float), vol.Range(min=0, max=1, min_included=False)),
        vol.Required(
            CONF_REPEATS, default=d.get(CONF_REPEATS, DEFAULT_REPEATS)
        ): vol.All(vol.Coerce(int), vol.Range(min=1)),
    }


def _sweep_fields(d: Mapping[str, Any]) -> dict[vol.Marker, Any]:
    return {
        vol.Required(
            CONF_EDGES_GRID, default=d.get(CONF_EDGES_GRID, EDGE_COUNT_OPTIONS)
        ): _list_of(int),
        vol.Required(
            CONF_P_GRID, default=d.get(CONF_P_GRID, P_MISS_POS_OPTIONS)
        ): _list_of(float),
        vol.Required(
            CONF_REPEATS, default=d.get(CONF_REPEATS, DEFAULT_SWEEP_REPEATS)
        ): vol.All(vol.Coerce(int), vol.Range(min=1)),
    }


SECTIONS: dict[str, Callable[[Mapping[str, Any]], dict[vol.Marker, Any]]] = {
    "run": _run_fields,
    "solver": _solver_fields,
    "prior": _prior_fields,
    "columns": _columns_fields,
    "simulation": _simulation_fields,
    "crossval": _crossval_fields,
    "sweep": _sweep_fields,
}


def build_schema(
    sections: Sequence[str], defaults: Mapping[str, Any] | None = None
) -> vol.Schema:
    """Return the schema combining the named sections.

    The named sections must not share keys. ``defaults`` overrides the
    built-in default of any key it holds.
    """
    d = defaults or {}
    fields: dict[vol.Marker, Any] = {}
    for name in sections:
        fields.update(SECTIONS[name](d))
    return vol.Schema(fields)


def _describe(err: vol.Invalid) -> str:
    field = ".".join(str(part) for part in err.path) or "config"
    return f"{field}: {err.msg}"


def validate(sections: Sequence[str], values: Mapping[str, Any]) -> dict[str, Any]:
    """Validate ``values`` and materialize every default.

    Raises:
        ConfigurationError: Naming the first offending field.

    """
    try:
        return build_schema(sections)(dict(values))
    except vol.MultipleInvalid as err:
        raise ConfigurationError(_describe(err.errors[0])) from err
    except vol.Invalid as err:
        raise ConfigurationError(_describe(err)) from err


def load_config_file(path: str | Path) -> dict[str, Any]:
    """Read a ``key=value`` file or the ``config`` block of a run manifest.

    Blank lines and lines starting with ``#`` are ignored.

    Raises:
        ParseError: If the file cannot be read or a line is malformed.

    """
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as err:
        raise ParseError(f"Cannot read config file {path}: {err}") from err

    if text.lstrip().startswith("{"):
        try:
            document = json.loads(text)
        except json.JSONDecodeError as err:
            raise ParseError(
                f"{path}: invalid JSON at line {err.lineno} column {err.colno}"
            ) from err
        config = document.get("config", document) if isinstance(document, dict) else None
        if not isinstance(config, dict):
            raise ParseError(f"{path}: expected a JSON object of options")
        return config

    values: dict[str, Any] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        key, sep, value = line.partition("=")
        key = key.strip()
        if not sep or not key:
            raise ParseError(f"{path}:{lineno}: expected key=value, got {raw!r}")
        if key in values:
            raise ParseError(f"{path}:{lineno}: duplicate key {key!r}")
        values[key] = value.strip()
    return values


def resolve(
    sections: Sequence[str],
    flags: Mapping[str, Any],
    file_values: Mapping[str, Any] | None = None,
) -> dict[str, Any]:
    """Merge defaults, command-line flags and config-file values, in that order.

    Flags left at ``None`` are treated as not given.

    Raises:
        ConfigurationError: If the merged options fail validation.

    """
    merged = {key: value for key, value in flags.items() if value is not None}
    merged.update(file_values or {})
    return validate(sections, merged)


def solver_options(conf: Mapping[str, Any]) -> SolverOptions:
    """Build solver options from a resolved configuration."""
    return SolverOptions(
        tol=conf[CONF_TOL],
        max_iters=conf[CONF_MAX_ITERS],
        init=conf[CONF_INIT],
        seed=conf[CONF_SEED],
        eps_prune=conf[CONF_EPS_PRUNE],
        candidate_cap=conf[CONF_CANDIDATE_CAP],
    )


def missingness_prior(conf: Mapping[str, Any]) -> MissingnessPrior:
    """Build the missingness prior from a resolved configuration."""
    return MissingnessPrior(
        p_miss_pos=conf[CONF_P_MISS_POS], p_miss_neg=conf[CONF_P_MISS_NEG]
    )


def pipeline_config(conf: Mapping[str, Any]) -> PipelineConfig:
    """Build a pipeline configuration from a resolved configuration."""
    return PipelineConfig(solver=solver_options(conf), prior=missingness_prior(conf))


def simulation_config(conf: Mapping[str, Any]) -> SimulationConfig:
    """Build a simulation configuration from a resolved configuration."""
    return SimulationConfig(
        n_nodes=conf[CONF_N_NODES],
        n_edges=conf[CONF_N_EDGES],
        n_samples=conf[CONF_N_SAMPLES],
        poisson_lambda=conf[CONF_POISSON_LAMBDA],
        p_miss_pos=conf[CONF_P_MISS_POS],
        p_miss_neg=conf[CONF_P_MISS_NEG],
        seed=conf[CONF_SEED],
    )
