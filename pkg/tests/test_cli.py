"""Tests for the command line."""

from __future__ import annotations

import json
from pathlib import Path
from typing import Any

import pytest

from pathinf.cli import build_parser, main
from pathinf.const import EXIT_CAPACITY, EXIT_OK, EXIT_PARSE, EXIT_VALIDATION


def _json(path: Path) -> dict[str, Any]:
    return json.loads(path.read_text(encoding="utf-8"))


def _write_json(path: Path, document: object) -> Path:
    path.write_text(json.dumps(document), encoding="utf-8")
    return path


class TestSimulate:
    """Test the simulate subcommand."""

    def test_infeasible(self, tmp_path: Path, capsys: pytest.CaptureFixture[str]) -> None:
        """Test too many edges exit with a validation error."""
        code = main(
            ["simulate", "--n-nodes", "7", "--n-edges", "26", "--out-dir", str(tmp_path)]
        )
        assert code == EXIT_VALIDATION
        assert "infeasible edge count" in capsys.readouterr().err

    def test_outputs(self, tmp_path: Path, capsys: pytest.CaptureFixture[str]) -> None:
        """Test data, ground truth and manifest are written."""
        code = main(
            ["simulate", "--n-samples", "50", "--seed", "4", "--out-dir", str(tmp_path)]
        )
        assert code == EXIT_OK
        assert "50 samples x 10 variables" in capsys.readouterr().out
        assert (tmp_path / "observations.csv").exists()
        truth = _json(tmp_path / "ground_truth.json")
        assert truth["metadata"]["config"]["seed"] == 4
        manifest = _json(tmp_path / "manifest-simulate.json")
        assert manifest["seed"] == 4
        assert set(manifest["outputs"]) == {"observations.csv", "ground_truth.json"}

    def test_byte_identical_reruns(self, tmp_path: Path) -> None:
        """Test thread count and manifest replays leave outputs unchanged."""
        base = ["simulate", "--n-samples", "200", "--seed", "9"]
        assert main([*base, "--threads", "1", "--out-dir", str(tmp_path / "one")]) == 0
        assert main([*base, "--threads", "8", "--out-dir", str(tmp_path / "eight")]) == 0
        manifest = tmp_path / "one" / "manifest-simulate.json"
        replay = ["simulate", "--config", str(manifest), "--out-dir", str(tmp_path / "re")]
        assert main(replay) == 0

        digests = [
            {
                name: entry["sha256"]
                for name, entry in _json(tmp_path / run / "manifest-simulate.json")[
                    "outputs"
                ].items()
            }
            for run in ("one", "eight", "re")
        ]
        assert digests[0] == digests[1] == digests[2]


class TestSummarize:
    """Test the summarize subcommand."""

    def test_toy(
        self, toy_csv: Path, tmp_path: Path, capsys: pytest.CaptureFixture[str]
    ) -> None:
        """Test complete data recovers the empirical state frequencies."""
        out = tmp_path / "out"
        assert main(["summarize", str(toy_csv), "--out-dir", str(out)]) == EXIT_OK
        document = _json(out / "state_matrix.json")
        assert document["labels"] == ["A", "B"]
        assert document["states"] == pytest.approx({"10": 0.7, "01": 0.3}, abs=1e-4)
        assert document["solver"]["converged"]
        assert capsys.readouterr().out.splitlines()[0].startswith("10  0.7")

    def test_invalid_token(
        self, tmp_path: Path, capsys: pytest.CaptureFixture[str]
    ) -> None:
        """Test a bad cell exits with a parse error naming its position."""
        path = tmp_path / "bad.csv"
        path.write_text("A,B\n1,0\n0,2\n", encoding="utf-8")
        assert main(["summarize", str(path), "--out-dir", str(tmp_path)]) == EXIT_PARSE
        assert "line 3, column 2" in capsys.readouterr().err

    def test_capacity(
        self, toy_csv: Path, tmp_path: Path, capsys: pytest.CaptureFixture[str]
    ) -> None:
        """Test exceeding the candidate cap has its own exit code."""
        code = main(
            ["summarize", str(toy_csv), "--candidate-cap", "1", "--out-dir", str(tmp_path)]
        )
        assert code == EXIT_CAPACITY
        assert "candidate_cap" in capsys.readouterr().err

    def test_invalid_prior(
        self, toy_csv: Path, tmp_path: Path, capsys: pytest.CaptureFixture[str]
    ) -> None:
        """Test option errors are reported before any work."""
        code = main(
            ["summarize", str(toy_csv), "--p-miss-pos", "0.7", "--out-dir", str(tmp_path)]
        )
        assert code == EXIT_VALIDATION
        assert "config: p_miss_pos" in capsys.readouterr().err

    def test_config_file_wins(self, toy_csv: Path, tmp_path: Path) -> None:
        """Test config-file values override flags."""
        conf = tmp_path / "run.conf"
        conf.write_text("max_iters = 7\n", encoding="utf-8")
        argv = ["summarize", str(toy_csv), "--max-iters", "50", "--config", str(conf)]
        assert main([*argv, "--out-dir", str(tmp_path)]) == EXIT_OK
        assert _json(tmp_path / "manifest-summarize.json")["config"]["max_iters"] == 7

    def test_missing_file(self, tmp_path: Path) -> None:
        """Test an absent input is a parse error."""
        argv = ["summarize", str(tmp_path / "absent.csv"), "--out-dir", str(tmp_path)]
        assert main(argv) == EXIT_PARSE


class TestInfer:
    """Test the infer subcommand."""

    def test_single_state(
        self, tmp_path: Path, capsys: pytest.CaptureFixture[str]
    ) -> None:
        """Test a two-positive state yields its edge."""
        path = _write_json(tmp_path / "sm.json", {"labels": ["A", "B"], "states": {"11": 1.0}})
        assert main(["infer", str(path), "--out-dir", str(tmp_path)]) == EXIT_OK
        assert "A -- B" in capsys.readouterr().out
        assert "A -- B" in (tmp_path / "graph.dot").read_text(encoding="utf-8")
        assert _json(tmp_path / "graph.json")["edges"] == [[0, 1]]

    def test_empty_states(
        self, tmp_path: Path, capsys: pytest.CaptureFixture[str]
    ) -> None:
        """Test an empty state map is a parse error."""
        path = _write_json(tmp_path / "sm.json", {"labels": ["A"], "states": {}})
        assert main(["infer", str(path), "--out-dir", str(tmp_path)]) == EXIT_PARSE
        assert "/states" in capsys.readouterr().err


class TestPipeline:
    """Test the pipeline subcommand."""

    def test_two_states(self, tmp_path: Path) -> None:
        """Test both stages run and write their artifacts."""
        path = tmp_path / "obs.csv"
        path.write_text("a,b,c\n" + "1,1,0\n" * 20 + "0,1,1\n" * 20, encoding="utf-8")
        out = tmp_path / "out"
        assert main(["pipeline", str(path), "--out-dir", str(out)]) == EXIT_OK
        assert _json(out / "graph.json")["edges"] == [[0, 1], [1, 2]]
        assert set(_json(out / "manifest-pipeline.json")["outputs"]) == {
            "state_matrix.json",
            "graph.json",
            "graph.dot",
        }

    def test_columns(self, tmp_path: Path) -> None:
        """Test a column subset is summarized alone."""
        path = tmp_path / "obs.csv"
        path.write_text("a,b,c\n" + "1,1,0\n" * 20 + "0,1,1\n" * 20, encoding="utf-8")
        argv = ["pipeline", str(path), "--columns", "c,b", "--out-dir", str(tmp_path)]
        assert main(argv) == EXIT_OK
        assert _json(tmp_path / "graph.json")["labels"] == ["c", "b"]

    def test_unknown_column(
        self, toy_csv: Path, tmp_path: Path, capsys: pytest.CaptureFixture[str]
    ) -> None:
        """Test unknown columns are reported with the stage name."""
        argv = ["pipeline", str(toy_csv), "--columns", "Z", "--out-dir", str(tmp_path)]
        assert main(argv) == EXIT_VALIDATION
        assert "summarize: Unknown variables: Z" in capsys.readouterr().err


class TestEvaluate:
    """Test the evaluate subcommand."""

    def test_perfect(self, tmp_path: Path, capsys: pytest.CaptureFixture[str]) -> None:
        """Test the true skeleton scores zero error rates."""
        graph = _write_json(tmp_path / "g.json", {"labels": ["X0", "X1"], "edges": [[0, 1]]})
        truth = _write_json(
            tmp_path / "t.json",
            {"nodes": ["X0", "X1"], "edges": [{"from": "X1", "to": "X0", "weight": 0.5}]},
        )
        assert main(["evaluate", str(graph), str(truth), "--out-dir", str(tmp_path)]) == 0
        assert "FP 0.0% FN 0.0%" in capsys.readouterr().out
        assert _json(tmp_path / "evaluation.json")["recovered"] == 1

    def test_node_mismatch(
        self, tmp_path: Path, capsys: pytest.CaptureFixture[str]
    ) -> None:
        """Test mismatched node counts are validation errors."""
        graph = _write_json(tmp_path / "g.json", {"labels": ["X0"], "edges": []})
        truth = _write_json(tmp_path / "t.json", {"nodes": ["X0", "X1"], "edges": []})
        argv = ["evaluate", str(graph), str(truth), "--out-dir", str(tmp_path)]
        assert main(argv) == EXIT_VALIDATION
        assert "evaluate:" in capsys.readouterr().err


class TestCrossvalAndSweep:
    """Test the crossval, sweep and compare subcommands."""

    def test_crossval_full_fraction(
        self, tmp_path: Path, capsys: pytest.CaptureFixture[str]
    ) -> None:
        """Test full-data reruns recover every edge every time."""
        path = tmp_path / "obs.csv"
        path.write_text("a,b,c\n" + "1,1,0\n" * 20 + "0,1,1\n" * 20, encoding="utf-8")
        argv = ["crossval", str(path), "--fraction", "1.0", "--repeats", "2"]
        assert main([*argv, "--out-dir", str(tmp_path)]) == EXIT_OK
        out = capsys.readouterr().out
        assert "* a -- b  100.0%" in out
        assert "* b -- c  100.0%" in out
        edges = _json(tmp_path / "stability.json")["edges"]
        assert all(entry["in_full_data"] for entry in edges)

    def test_sweep(self, tmp_path: Path) -> None:
        """Test a one-cell sweep writes its table."""
        argv = [
            "sweep",
            "--edges-grid",
            "3",
            "--p-grid",
            "0.1",
            "--repeats",
            "1",
            "--n-nodes",
            "4",
            "--n-samples",
            "40",
            "--out-dir",
            str(tmp_path),
        ]
        assert main(argv) == EXIT_OK
        lines = (tmp_path / "sweep.csv").read_text(encoding="utf-8").splitlines()
        assert lines[0] == "rate,n_edges,p=0.1"
        assert lines[1].startswith("false_positive,3,")
        assert lines[2].startswith("false_negative,3,")

    def test_compare(self, tmp_path: Path, capsys: pytest.CaptureFixture[str]) -> None:
        """Test two graphs are compared by label."""
        first = _write_json(tmp_path / "a.json", {"labels": ["p", "q"], "edges": [[0, 1]]})
        second = _write_json(tmp_path / "b.json", {"labels": ["q", "p"], "edges": [[0, 1]]})
        assert main(["compare", str(first), str(second), "--out-dir", str(tmp_path)]) == 0
        assert "shared: p -- q" in capsys.readouterr().out


def _digests(out_dir: Path, subcommand: str) -> dict[str, str]:
    outputs = _json(out_dir / f"manifest-{subcommand}.json")["outputs"]
    return {name: entry["sha256"] for name, entry in outputs.items()}


SWEEP_ARGS = [
    "--edges-grid",
    "3",
    "--p-grid",
    "0.1,0.2",
    "--repeats",
    "2",
    "--n-nodes",
    "4",
    "--n-samples",
    "40",
]


@pytest.mark.parametrize(
    ("subcommand", "options", "outputs"),
    [
        ("summarize", [], {"state_matrix.json"}),
        ("pipeline", [], {"state_matrix.json", "graph.json", "graph.dot"}),
        ("crossval", ["--fraction", "0.8", "--repeats", "4"], {"stability.json"}),
        ("sweep", SWEEP_ARGS, {"sweep.csv", "sweep.json"}),
    ],
)
def test_threads_and_replay_identical(
    tmp_path: Path, subcommand: str, options: list[str], outputs: set[str]
) -> None:
    """Test outputs do not depend on thread count and replay from the manifest."""
    data = tmp_path / "obs.csv"
    data.write_text(
        "a,b,c,d\n"
        + "1,1,0,0\n" * 15
        + "0,1,1,NA\n" * 10
        + "1,NA,0,1\n" * 6
        + "NA,1,1,0\n" * 4,
        encoding="utf-8",
    )
    positionals = [] if subcommand == "sweep" else [str(data)]
    base = [subcommand, *positionals, *options, "--seed", "5"]
    assert main([*base, "--threads", "1", "--out-dir", str(tmp_path / "one")]) == 0
    assert main([*base, "--threads", "8", "--out-dir", str(tmp_path / "eight")]) == 0
    manifest = tmp_path / "eight" / f"manifest-{subcommand}.json"
    replay = [subcommand, *positionals, "--config", str(manifest)]
    assert main([*replay, "--out-dir", str(tmp_path / "re")]) == 0

    digests = [_digests(tmp_path / run, subcommand) for run in ("one", "eight", "re")]
    assert set(digests[0]) == outputs
    assert digests[0] == digests[1] == digests[2]
    for name in outputs:
        first = (tmp_path / "one" / name).read_bytes()
        assert first == (tmp_path / "re" / name).read_bytes()


def test_parser_requires_subcommand() -> None:
    """Test a subcommand is mandatory."""
    with pytest.raises(SystemExit):
        build_parser().parse_args([])
