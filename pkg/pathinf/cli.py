"""Command-line front end."""

from __future__ import annotations

import argparse
from collections.abc import Callable, Iterator, Sequence
from contextlib import contextmanager
import logging
from pathlib import Path
import sys
import time
from typing import Any

from . import codecs
from .config import (
    load_config_file,
    pipeline_config,
    resolve,
    simulation_config,
    solver_options,
)
from .const import (
    CONF_COLUMNS,
    CONF_EDGES_GRID,
    CONF_FRACTION,
    CONF_N_EDGES,
    CONF_P_GRID,
    CONF_REPEATS,
    CONF_SEED,
    CONF_THREADS,
    DOMAIN,
    EXIT_CAPACITY,
    EXIT_INTERNAL,
    EXIT_OK,
    EXIT_PARSE,
    EXIT_VALIDATION,
    INIT_OPTIONS,
    LOGGER,
    VERSION,
)
from .evaluate import build_grid, cross_validate, diff, shared_edges, sweep, sweep_table
from .exceptions import (
    CapacityError,
    ConfigurationError,
    DimensionError,
    ParseError,
    PathInfError,
)
from .infer import greedy_infer
from .observations import ObservationMatrix
from .pipeline import PipelineConfig, run_pipeline
from .simulate import generate_dataset
from .summarize import fit, prune

type Handler = Callable[[argparse.Namespace, dict[str, Any], codecs.RunManifest], None]

SUBCOMMAND_SECTIONS: dict[str, tuple[str, ...]] = {
    "simulate": ("run", "simulation"),
    "summarize": ("run", "solver", "prior", "columns"),
    "infer": ("run",),
    "pipeline": ("run", "solver", "prior", "columns"),
    "evaluate": ("run",),
    "crossval": ("run", "solver", "prior", "columns", "crossval"),
    "sweep": ("run", "simulation", "solver", "sweep"),
    "compare": ("run",),
}


@contextmanager
def stage(name: str) -> Iterator[None]:
    """Prefix errors raised inside the block with the stage name."""
    try:
        yield
    except PathInfError as err:
        raise type(err)(f"{name}: {err}") from err


def _out(text: str) -> None:
    sys.stdout.write(text if text.endswith("\n") else text + "\n")


def _percent(value: float) -> str:
    return f"{100 * value:.1f}%"


def _load_observations(path: str, conf: dict[str, Any]) -> ObservationMatrix:
    obs = codecs.read_observations(path)
    if conf.get(CONF_COLUMNS):
        obs = obs.select_variables(conf[CONF_COLUMNS])
    return obs


def _emit(manifest: codecs.RunManifest, out_dir: Path, name: str) -> Path:
    path = out_dir / name
    manifest.add_output(name, path)
    LOGGER.info("Wrote %s", path)
    return path


def cmd_simulate(
    args: argparse.Namespace, conf: dict[str, Any], manifest: codecs.RunManifest
) -> None:
    """Generate a dataset and its ground truth."""
    cfg = simulation_config(conf)
    obs, dag = generate_dataset(cfg, workers=conf[CONF_THREADS])
    codecs.write_observations(args.out_dir / "observations.csv", obs)
    _emit(manifest, args.out_dir, "observations.csv")
    codecs.write_json(args.out_dir / "ground_truth.json", codecs.ground_truth_document(dag))
    _emit(manifest, args.out_dir, "ground_truth.json")
    _out(
        f"{obs.n_rows} samples x {obs.n_vars} variables, "
        f"{len(dag.weights)} true edges"
    )


def cmd_summarize(
    args: argparse.Namespace, conf: dict[str, Any], manifest: codecs.RunManifest
) -> None:
    """Fit and prune the state matrix of an observation CSV."""
    manifest.inputs["observations"] = args.observations
    obs = _load_observations(args.observations, conf)
    config = pipeline_config(conf)
    dist = fit(obs, config.prior, config.solver)
    sm = prune(dist, config.solver.eps_prune)
    codecs.write_json(
        args.out_dir / "state_matrix.json",
        codecs.state_matrix_document(sm, dist, config.prior),
    )
    _emit(manifest, args.out_dir, "state_matrix.json")
    for key, p in sorted(sm.as_dict().items(), key=lambda item: -item[1]):
        _out(f"{key}  {p:.6f}")


def cmd_infer(
    args: argparse.Namespace, conf: dict[str, Any], manifest: codecs.RunManifest
) -> None:
    """Infer the pathway graph from a state matrix JSON."""
    manifest.inputs["state_matrix"] = args.state_matrix
    sm = codecs.read_state_matrix(args.state_matrix)
    graph, trace = greedy_infer(sm)
    codecs.write_json(args.out_dir / "graph.json", codecs.graph_document(graph, trace))
    _emit(manifest, args.out_dir, "graph.json")
    dot = codecs.render_dot(graph, trace)
    (args.out_dir / "graph.dot").write_text(dot, encoding="utf-8")
    _emit(manifest, args.out_dir, "graph.dot")
    _out(dot)


def cmd_pipeline(
    args: argparse.Namespace, conf: dict[str, Any], manifest: codecs.RunManifest
) -> None:
    """Summarize and infer in one run."""
    manifest.inputs["observations"] = args.observations
    with stage("summarize"):
        obs = _load_observations(args.observations, conf)
        config = pipeline_config(conf)
        dist = fit(obs, config.prior, config.solver)
        sm = prune(dist, config.solver.eps_prune)
    codecs.write_json(
        args.out_dir / "state_matrix.json",
        codecs.state_matrix_document(sm, dist, config.prior),
    )
    _emit(manifest, args.out_dir, "state_matrix.json")
    with stage("infer"):
        graph, trace = greedy_infer(sm)
    codecs.write_json(args.out_dir / "graph.json", codecs.graph_document(graph, trace))
    _emit(manifest, args.out_dir, "graph.json")
    dot = codecs.render_dot(graph, trace)
    (args.out_dir / "graph.dot").write_text(dot, encoding="utf-8")
    _emit(manifest, args.out_dir, "graph.dot")
    _out(dot)


def cmd_evaluate(
    args: argparse.Namespace, conf: dict[str, Any], manifest: codecs.RunManifest
) -> None:
    """Score an inferred graph against a ground-truth DAG."""
    manifest.inputs.update(graph=args.graph, ground_truth=args.ground_truth)
    with stage("evaluate"):
        graph = codecs.read_graph(args.graph)
        truth = codecs.read_ground_truth(args.ground_truth)
        result = diff(graph, truth)
    codecs.write_json(args.out_dir / "evaluation.json", result.as_dict())
    _emit(manifest, args.out_dir, "evaluation.json")
    _out(
        f"true {result.true_edges}  recovered {result.recovered}  "
        f"false_pos {result.false_pos}  false_neg {result.false_neg}"
    )
    _out(f"FP {_percent(result.fp_rate)} FN {_percent(result.fn_rate)}")


def cmd_crossval(
    args: argparse.Namespace, conf: dict[str, Any], manifest: codecs.RunManifest
) -> None:
    """Report edge stability over row subsamples."""
    manifest.inputs["observations"] = args.observations
    obs = _load_observations(args.observations, conf)
    with stage("crossval"):
        report = cross_validate(
            obs,
            fraction=conf[CONF_FRACTION],
            repeats=conf[CONF_REPEATS],
            config=pipeline_config(conf),
            seed=conf[CONF_SEED],
            workers=conf[CONF_THREADS],
        )
    full = set(report.full_edges)
    codecs.write_json(
        args.out_dir / "stability.json",
        {
            "fraction": report.fraction,
            "repeats": report.repeats,
            "edges": [
                {"edge": list(edge), "frequency": freq, "in_full_data": edge in full}
                for edge, freq in report.sorted_frequencies()
            ],
        },
    )
    _emit(manifest, args.out_dir, "stability.json")
    for (a, b), freq in report.sorted_frequencies():
        marker = "*" if (a, b) in full else " "
        _out(f"{marker} {a} -- {b}  {_percent(freq)}")


def cmd_sweep(
    args: argparse.Namespace, conf: dict[str, Any], manifest: codecs.RunManifest
) -> None:
    """Run the simulation grid and tabulate FP/FN rates."""
    # grid cells replace the edge count and p_miss_pos of the base
    base = simulation_config({**conf, CONF_N_EDGES: 0})
    with stage("sweep"):
        grid = build_grid(conf[CONF_EDGES_GRID], conf[CONF_P_GRID], base)
        cells = sweep(
            grid,
            repeats=conf[CONF_REPEATS],
            seed=conf[CONF_SEED],
            pipeline_config=PipelineConfig(solver=solver_options(conf)),
            workers=conf[CONF_THREADS],
        )
    table = sweep_table(cells)
    codecs.write_rows(args.out_dir / "sweep.csv", table)
    _emit(manifest, args.out_dir, "sweep.csv")
    codecs.write_json(args.out_dir / "sweep.json", [cell.as_dict() for cell in cells])
    _emit(manifest, args.out_dir, "sweep.json")
    for row in table:
        _out("\t".join(row))


def cmd_compare(
    args: argparse.Namespace, conf: dict[str, Any], manifest: codecs.RunManifest
) -> None:
    """Compare two inferred graphs by variable label."""
    manifest.inputs.update(graph_a=args.graph_a, graph_b=args.graph_b)
    result = shared_edges(codecs.read_graph(args.graph_a), codecs.read_graph(args.graph_b))
    codecs.write_json(args.out_dir / "comparison.json", result.as_dict())
    _emit(manifest, args.out_dir, "comparison.json")
    for name, edges in result.as_dict().items():
        _out(f"{name}: " + ", ".join(f"{a} -- {b}" for a, b in edges))


HANDLERS: dict[str, Handler] = {
    "simulate": cmd_simulate,
    "summarize": cmd_summarize,
    "infer": cmd_infer,
    "pipeline": cmd_pipeline,
    "evaluate": cmd_evaluate,
    "crossval": cmd_crossval,
    "sweep": cmd_sweep,
    "compare": cmd_compare,
}


def _add_solver_flags(parser: argparse.ArgumentParser) -> None:
    group = parser.add_argument_group("solver")
    group.add_argument("--tol", type=float)
    group.add_argument("--max-iters", dest="max_iters", type=int)
    group.add_argument("--init", choices=INIT_OPTIONS)
    group.add_argument("--eps-prune", dest="eps_prune", type=float)
    group.add_argument("--candidate-cap", dest="candidate_cap", type=int)


def _add_prior_flags(parser: argparse.ArgumentParser) -> None:
    group = parser.add_argument_group("missingness")
    group.add_argument("--p-miss-pos", dest="p_miss_pos", type=float)
    group.add_argument("--p-miss-neg", dest="p_miss_neg", type=float)


def _add_simulation_flags(parser: argparse.ArgumentParser) -> None:
    group = parser.add_argument_group("simulation")
    group.add_argument("--n-nodes", dest="n_nodes", type=int)
    group.add_argument("--n-edges", dest="n_edges", type=int)
    group.add_argument("--n-samples", dest="n_samples", type=int)
    group.add_argument("--poisson-lambda", dest="poisson_lambda", type=float)


def _add_columns_flag(parser: argparse.ArgumentParser) -> None:
    parser.add_argument(
        "--columns", help="comma-separated subset of variables, in output order"
    )


def build_parser() -> argparse.ArgumentParser:
    """Return the argument parser of every subcommand."""
    shared = argparse.ArgumentParser(add_help=False)
    shared.add_argument("--seed", type=int, help="master seed")
    shared.add_argument("--threads", type=int, help="worker threads")
    shared.add_argument(
        "--config", type=Path, help="key=value file or run manifest; overrides flags"
    )
    shared.add_argument("--out-dir", dest="out_dir", type=Path, default=Path())
    shared.add_argument("-v", "--verbose", action="count", default=0)

    parser = argparse.ArgumentParser(
        prog=DOMAIN,
        description="Infer undirected pathway graphs from incomplete binary data.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {VERSION}")
    sub = parser.add_subparsers(dest="subcommand", required=True)

    simulate = sub.add_parser("simulate", parents=[shared], help="generate data")
    _add_simulation_flags(simulate)
    _add_prior_flags(simulate)

    summarize = sub.add_parser("summarize", parents=[shared], help="fit state matrix")
    summarize.add_argument("observations")
    _add_solver_flags(summarize)
    _add_prior_flags(summarize)
    _add_columns_flag(summarize)

    infer = sub.add_parser("infer", parents=[shared], help="infer graph")
    infer.add_argument("state_matrix")

    pipeline = sub.add_parser("pipeline", parents=[shared], help="summarize + infer")
    pipeline.add_argument("observations")
    _add_solver_flags(pipeline)
    _add_prior_flags(pipeline)
    _add_columns_flag(pipeline)

    evaluate = sub.add_parser("evaluate", parents=[shared], help="score graph")
    evaluate.add_argument("graph")
    evaluate.add_argument("ground_truth")

    crossval = sub.add_parser("crossval", parents=[shared], help="edge stability")
    crossval.add_argument("observations")
    crossval.add_argument("--fraction", type=float)
    crossval.add_argument("--repeats", type=int)
    _add_solver_flags(crossval)
    _add_prior_flags(crossval)
    _add_columns_flag(crossval)

    sweep_parser = sub.add_parser("sweep", parents=[shared], help="FP/FN grid")
    sweep_parser.add_argument("--edges-grid", dest="edges_grid")
    sweep_parser.add_argument("--p-grid", dest="p_grid")
    sweep_parser.add_argument("--repeats", type=int)
    _add_simulation_flags(sweep_parser)
    _add_solver_flags(sweep_parser)
    sweep_parser.add_argument("--p-miss-neg", dest="p_miss_neg", type=float)

    compare = sub.add_parser("compare", parents=[shared], help="shared edges")
    compare.add_argument("graph_a")
    compare.add_argument("graph_b")
    return parser


_NOT_OPTIONS = {"subcommand", "config", "out_dir", "verbose"}
_POSITIONALS = {
    "observations",
    "state_matrix",
    "graph",
    "ground_truth",
    "graph_a",
    "graph_b",
}


def _exit_code(err: BaseException) -> int:
    if isinstance(err, (ConfigurationError, DimensionError)):
        return EXIT_VALIDATION
    if isinstance(err, ParseError):
        return EXIT_PARSE
    if isinstance(err, CapacityError):
        return EXIT_CAPACITY
    return EXIT_INTERNAL


def _configure_logging(verbose: int) -> None:
    level = {0: logging.WARNING, 1: logging.INFO}.get(verbose, logging.DEBUG)
    logging.basicConfig(
        level=level, format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr
    )


def run(args: argparse.Namespace) -> None:
    """Resolve options, run one subcommand and write its manifest."""
    start = time.monotonic()
    flags = {
        key: value
        for key, value in vars(args).items()
        if key not in _NOT_OPTIONS | _POSITIONALS
    }
    with stage("config"):
        file_values = load_config_file(args.config) if args.config else None
        conf = resolve(SUBCOMMAND_SECTIONS[args.subcommand], flags, file_values)
    args.out_dir.mkdir(parents=True, exist_ok=True)

    manifest = codecs.RunManifest(
        version=VERSION,
        subcommand=args.subcommand,
        config=conf,
        seed=conf[CONF_SEED],
    )
    HANDLERS[args.subcommand](args, conf, manifest)
    manifest.duration_seconds = round(time.monotonic() - start, 3)
    manifest.write(args.out_dir / f"manifest-{args.subcommand}.json")


def main(argv: Sequence[str] | None = None) -> int:
    """Run the command line and return the exit code."""
    args = build_parser().parse_args(argv)
    _configure_logging(args.verbose)
    try:
        run(args)
    except PathInfError as err:
        sys.stderr.write(f"{DOMAIN}: error: {err}\n")
        return _exit_code(err)
    except Exception as err:  # noqa: BLE001
        LOGGER.exception("Unexpected failure")
        sys.stderr.write(f"{DOMAIN}: internal error: {err}\n")
        return EXIT_INTERNAL
    return EXIT_OK
