"""Test the CLI of the ``decoding-dynamics`` package."""

# LICENSE HEADER MANAGED BY add-license-header
# Copyright (c) 2025 The decoding-dynamics authors.
#
# This file is part of decoding-dynamics.
#
# SPDX-License-Identifier: Apache-2.0
# LICENSE HEADER MANAGED BY add-license-header

# pylint: disable=redefined-outer-name
# pylint: disable=unused-argument
import filecmp
import json
import logging

import pandas as pd
import pytest
import yaml
from dir_content_diff import assert_equal_trees

import decoding_dynamics
import decoding_dynamics.cli
from decoding_dynamics import BaseCheck
from decoding_dynamics.util import DEFAULT_SEED


def read_json(path):
    """Load a JSON report."""
    with path.open(encoding="utf-8") as f:
        return json.load(f)


def read_jsonl(path):
    """Load the records of a JSON-lines file."""
    with path.open(encoding="utf-8") as f:
        return [json.loads(line) for line in f if line.strip()]


class TestCli:
    """Tests of the CLI."""

    def test_help(self, cli_runner):
        """Test the --help option."""
        result = cli_runner.invoke(decoding_dynamics.cli.main, ["--help"])
        assert (
            "A command line tool to analyze the decoding dynamics of masked diffusion models."
            in result.stdout
        )
        for command in ["metrics", "simulate", "verify-theory", "puzzle", "runtime"]:
            assert command in result.stdout

    def test_version(self, cli_runner):
        """Test the --version option."""
        result = cli_runner.invoke(decoding_dynamics.cli.main, ["--version"])
        assert result.exit_code == 0
        assert decoding_dynamics.__version__ in result.stdout


class TestMetrics:
    """Tests of the metrics command."""

    def test_reports(self, cli_runner, trace_file, tmp_path, caplog):
        """Test the reports written from a trace file."""
        caplog.set_level(logging.INFO, logger="decoding-dynamics")
        out_dir = tmp_path / "metrics"
        result = cli_runner.invoke(
            decoding_dynamics.cli.main,
            ["metrics", "--input", str(trace_file), "--out-dir", str(out_dir)],
            catch_exceptions=False,
        )
        assert result.exit_code == 0
        assert caplog.messages[-1] == f"Metrics of 3 traces written into '{out_dir}'"
        assert sorted(p.name for p in out_dir.iterdir()) == [
            "combinations.csv",
            "groups.csv",
            "labels.csv",
            "mean_trajectories.csv",
            "summary.json",
            "trajectories.csv",
        ]

        summary = read_json(out_dir / "summary.json")
        assert summary["version"] == decoding_dynamics.__version__
        assert summary["config"]["command"] == "metrics"
        assert "out_dir" not in summary["config"]
        assert summary["summary"]["n_traces"] == 3
        assert summary["summary"]["mean_afp"] == pytest.approx(13 / 9)
        assert summary["summary"]["mean_tau"] == pytest.approx(5 / 6)

        trajectories = pd.read_csv(out_dir / "trajectories.csv", comment="#")
        assert len(trajectories) == 4
        assert trajectories.loc[trajectories["sample_id"] == "s2", "block_afp"].tolist() == [
            1.0,
            2.0,
        ]

    def test_group_by(self, cli_runner, trace_file, tmp_path):
        """Test the grouping options."""
        out_dir = tmp_path / "metrics"
        result = cli_runner.invoke(
            decoding_dynamics.cli.main,
            [
                "metrics",
                "--input",
                str(trace_file),
                "--out-dir",
                str(out_dir),
                "--group-by",
                "domain_tag",
                "--bucket",
                "1-1,2-2",
            ],
            catch_exceptions=False,
        )
        assert result.exit_code == 0
        groups = read_json(out_dir / "summary.json")["summary"]["groups"]
        assert {tuple(sorted(g)) for g in groups} == {
            ("block_bucket", "count", "domain_tag", "excluded_tau_count", "mean_afp", "mean_tau")
        }
        assert sum(g["count"] for g in groups) == 3

    def test_malformed_input(self, cli_runner, tmp_path):
        """Test that a malformed trace file gives the input exit code."""
        path = tmp_path / "broken.jsonl"
        path.write_text('{"sample_id": "s0",\n', encoding="utf-8")
        result = cli_runner.invoke(
            decoding_dynamics.cli.main,
            ["metrics", "--input", str(path), "--out-dir", str(tmp_path / "out")],
        )
        assert result.exit_code == 10
        assert "[trace-model] Line 1: malformed JSON" in result.output

    def test_invalid_trace(self, cli_runner, tmp_path):
        """Test that an invalid trace names its sample and field."""
        path = tmp_path / "invalid.jsonl"
        record = {
            "sample_id": "bad",
            "step_scope": "global",
            "tokens": [{"position": 0, "finalize_step": 0, "block_index": 0}],
        }
        path.write_text(json.dumps(record) + "\n", encoding="utf-8")
        result = cli_runner.invoke(
            decoding_dynamics.cli.main,
            ["metrics", "--input", str(path), "--out-dir", str(tmp_path / "out")],
        )
        assert result.exit_code == 10
        assert "Invalid sample 'bad', field 'finalize_step'" in result.output


class TestSimulate:
    """Tests of the simulate command."""

    def test_ar_baseline(self, cli_runner, tmp_path):
        """Test that the autoregressive baseline is sequential."""
        out_dir = tmp_path / "simulate"
        result = cli_runner.invoke(
            decoding_dynamics.cli.main,
            [
                "simulate",
                "--seed",
                "1",
                "--out-dir",
                str(out_dir),
                "--mode",
                "ar_baseline",
                "--contexts",
                "3",
            ],
            catch_exceptions=False,
        )
        assert result.exit_code == 0
        assert len(list((out_dir / "model").glob("*.txt"))) == 3

        summary = read_json(out_dir / "summary.json")["summary"]
        assert summary["n_traces"] == 3
        assert summary["mean_afp"] == 1.0
        assert summary["mean_tau"] == 1.0

        records = read_jsonl(out_dir / "traces.jsonl")
        assert records[0]["header"]["config"]["modes"] == ["ar_baseline"]
        assert [r["metadata"]["mode"] for r in records[1:]] == ["ar_baseline"] * 3

    def test_modes(self, cli_runner, tmp_path):
        """Test several modes and thresholds in one run."""
        out_dir = tmp_path / "simulate"
        result = cli_runner.invoke(
            decoding_dynamics.cli.main,
            [
                "simulate",
                "--out-dir",
                str(out_dir),
                "--contexts",
                "2",
                "--mode",
                "top1",
                "--mode",
                "accept_all",
                "--mode",
                "threshold",
                "--tau",
                "0.3",
                "--tau",
                "0.9",
            ],
            catch_exceptions=False,
        )
        assert result.exit_code == 0
        sample_ids = [r["sample_id"] for r in read_jsonl(out_dir / "traces.jsonl")[1:]]
        assert len(sample_ids) == 8
        assert sorted({s.split("/")[0] for s in sample_ids}) == [
            "accept_all",
            "threshold-0.3",
            "threshold-0.9",
            "top1",
        ]

        summary = read_json(out_dir / "summary.json")["summary"]
        accept_all = [g for g in summary["groups"] if g["mode"] == "accept_all"]
        assert accept_all[0]["mean_afp"] == 3.0

    def test_threshold_needs_tau(self, cli_runner, tmp_path):
        """Test the error raised when no threshold is given."""
        result = cli_runner.invoke(
            decoding_dynamics.cli.main,
            ["simulate", "--out-dir", str(tmp_path / "out"), "--mode", "threshold"],
        )
        assert result.exit_code == 20
        assert "[decoder-sim] The threshold mode needs --tau" in result.output

    def test_model_files(self, cli_runner, tmp_path):
        """Test decoding the models saved by a previous run."""
        first = tmp_path / "first"
        cli_runner.invoke(
            decoding_dynamics.cli.main,
            ["simulate", "--out-dir", str(first), "--contexts", "2"],
            catch_exceptions=False,
        )
        models = sorted(str(p) for p in (first / "model").glob("*.txt"))
        args = ["simulate", "--out-dir", str(tmp_path / "second")]
        for model in models:
            args.extend(["--model", model])
        result = cli_runner.invoke(decoding_dynamics.cli.main, args, catch_exceptions=False)
        assert result.exit_code == 0
        assert not (tmp_path / "second" / "model").exists()
        first_ids = [r["sample_id"] for r in read_jsonl(first / "traces.jsonl")[1:]]
        second = read_jsonl(tmp_path / "second" / "traces.jsonl")
        assert [r["sample_id"] for r in second[1:]] == first_ids
        assert second[0]["header"]["config"]["model_paths"] == models

    def test_determinism(self, cli_runner, tmp_path):
        """Test that the same seed gives byte-identical outputs."""
        args = ["simulate", "--seed", "7", "--mode", "threshold", "--tau", "0.5", "--contexts", "4"]
        for name in ["a", "b"]:
            result = cli_runner.invoke(
                decoding_dynamics.cli.main,
                args + ["--out-dir", str(tmp_path / name)],
                catch_exceptions=False,
            )
            assert result.exit_code == 0

        assert_equal_trees(tmp_path / "a", tmp_path / "b")
        for path in (tmp_path / "a").rglob("*"):
            if path.is_file():
                other = tmp_path / "b" / path.relative_to(tmp_path / "a")
                assert filecmp.cmp(path, other, shallow=False), path


class TestConfig:
    """Tests of the configuration option."""

    @pytest.fixture
    def config(self):
        """The config as a dict."""
        return {"seed": 5, "simulate": {"contexts": 2, "block-size": 2, "length": 4}}

    @pytest.fixture
    def config_json(self, config):
        """The config as a JSON string."""
        return json.dumps(config)

    @pytest.fixture
    def config_yaml(self, config, tmp_path):
        """The config as a YAML file."""
        filepath = tmp_path / "config.yaml"
        with filepath.open("w", encoding="utf-8") as f:
            yaml.dump(config, f)
        return str(filepath)

    @pytest.fixture
    def config_str(self, request):
        """The string given to the CLI to pass the config."""
        return request.getfixturevalue(request.param)

    @pytest.mark.parametrize("config_str", ["config_json", "config_yaml"], indirect=True)
    def test_defaults(self, cli_runner, tmp_path, config_str):
        """Test that the configuration gives the option defaults."""
        out_dir = tmp_path / "simulate"
        result = cli_runner.invoke(
            decoding_dynamics.cli.main,
            ["--config", config_str, "simulate", "--out-dir", str(out_dir), "--length", "6"],
            catch_exceptions=False,
        )
        assert result.exit_code == 0
        config = read_json(out_dir / "summary.json")["config"]
        assert config["seed"] == 5
        assert config["contexts"] == 2
        assert config["block_size"] == 2
        assert config["length"] == 6

    def test_missing_file(self, cli_runner, tmp_path):
        """Test a configuration that is neither JSON nor an existing file."""
        result = cli_runner.invoke(
            decoding_dynamics.cli.main,
            ["--config", str(tmp_path / "missing.yaml"), "simulate"],
        )
        assert result.exit_code == 2
        assert "does not exist" in result.output


class TestVerifyTheory:
    """Tests of the verify-theory command."""

    def test_family(self, cli_runner, tmp_path, registry_reseter):
        """Test running one family of checks."""
        out_dir = tmp_path / "theory"
        result = cli_runner.invoke(
            decoding_dynamics.cli.main,
            [
                "verify-theory",
                "--out-dir",
                str(out_dir),
                "--family",
                "runtime",
                "--n-cases",
                "3",
                "--check-cases",
                "runtime_monotonicity=2",
            ],
            catch_exceptions=False,
        )
        assert result.exit_code == 0
        report = read_json(out_dir / "theory_report.json")
        assert report["passed"] is True
        assert {r["name"]: r["n_cases"] for r in report["results"]} == {
            "runtime_monotonicity": 2,
            "runtime_worked_example": 3,
        }

    def test_violation(self, cli_runner, tmp_path, registry_reseter):
        """Test that a violated property gives the failure exit code."""

        class AlwaysViolatedCheck(BaseCheck):
            """A property that never holds."""

            name = "always_violated"
            family = "runtime"

            def generate(self, rng, n_cases):
                yield from range(n_cases)

            def evaluate(self, case):
                return {"ok": False, "case": case}

        decoding_dynamics.register_check(AlwaysViolatedCheck())
        out_dir = tmp_path / "theory"
        result = cli_runner.invoke(
            decoding_dynamics.cli.main,
            ["verify-theory", "--out-dir", str(out_dir), "--check", "always_violated"],
        )
        assert result.exit_code == 31
        assert "The property 'always_violated' is violated" in result.output
        report = read_json(out_dir / "theory_report.json")
        assert report["passed"] is False
        assert report["results"][0]["summary"]["violations"] == 100

    def test_bad_check_cases(self, cli_runner, tmp_path):
        """Test a malformed --check-cases value."""
        result = cli_runner.invoke(
            decoding_dynamics.cli.main,
            ["verify-theory", "--out-dir", str(tmp_path), "--check-cases", "oops"],
        )
        assert result.exit_code == 2

    @pytest.mark.parametrize(
        "option", [["--check", "nope"], ["--check-cases", "nope=3"]], ids=["check", "check-cases"]
    )
    def test_unknown_check(self, cli_runner, tmp_path, option):
        """Test that an unknown check name is an input error."""
        result = cli_runner.invoke(
            decoding_dynamics.cli.main, ["verify-theory", "--out-dir", str(tmp_path), *option]
        )
        assert result.exit_code == 30
        assert "[cli-reports] Unknown checks: ['nope']" in result.output
        assert not (tmp_path / "theory_report.json").exists()

    def test_default_puzzles(self, cli_runner, tmp_path):
        """Test the full default puzzle batches with the default seed."""
        result = cli_runner.invoke(
            decoding_dynamics.cli.main,
            ["verify-theory", "--out-dir", str(tmp_path), "--family", "puzzles"],
            catch_exceptions=False,
        )
        assert result.exit_code == 0
        report = read_json(tmp_path / "theory_report.json")
        assert report["config"]["seed"] == DEFAULT_SEED
        assert {r["name"]: r["n_cases"] for r in report["results"]} == {
            "crossmath_puzzles": 150,
            "sudoku_puzzles": 150,
        }


class TestPuzzle:
    """Tests of the puzzle command."""

    def test_sudoku(self, cli_runner, tmp_path):
        """Test generating and solving Sudoku grids."""
        out_dir = tmp_path / "puzzle"
        result = cli_runner.invoke(
            decoding_dynamics.cli.main,
            ["puzzle", "--out-dir", str(out_dir), "--count", "2", "--givens", "40", "--seed", "3"],
            catch_exceptions=False,
        )
        assert result.exit_code == 0
        assert sorted(p.name for p in (out_dir / "puzzles").iterdir()) == [
            "sudoku_000.txt",
            "sudoku_001.txt",
        ]
        orders = pd.read_csv(out_dir / "solve_orders.csv", comment="#")
        assert len(orders) == 6
        left_to_right = orders.loc[orders["strategy"] == "left_to_right"]
        assert (left_to_right["afp"] == 1).all()
        assert (left_to_right["tau"] == 1).all()
        parallel = orders.loc[orders["strategy"] == "parallel_wave"]
        assert (parallel["afp"] >= 1).all()

        records = read_jsonl(out_dir / "traces.jsonl")
        assert records[1]["sample_id"] == "sudoku_000/any_order"
        assert records[1]["domain_tag"] == "sudoku"

    def test_crossmath(self, cli_runner, tmp_path):
        """Test generating and solving cross-math grids."""
        out_dir = tmp_path / "puzzle"
        result = cli_runner.invoke(
            decoding_dynamics.cli.main,
            ["puzzle", "--out-dir", str(out_dir), "--kind", "crossmath", "--count", "2"],
            catch_exceptions=False,
        )
        assert result.exit_code == 0
        summary = read_json(out_dir / "summary.json")
        assert summary["config"]["kind"] == "crossmath"
        assert (out_dir / "solutions" / "crossmath_001.txt").exists()

    def test_bad_givens(self, cli_runner, tmp_path):
        """Test an impossible givens target."""
        result = cli_runner.invoke(
            decoding_dynamics.cli.main,
            ["puzzle", "--out-dir", str(tmp_path), "--givens", "10", "--count", "1"],
        )
        assert result.exit_code == 40
        assert "[puzzles] givens_target must be in [17, 80]" in result.output


class TestRuntime:
    """Tests of the runtime command."""

    def test_table(self, cli_runner, runtime_spec_file, tmp_path):
        """Test the trade-off table of a spec file."""
        out_dir = tmp_path / "runtime"
        result = cli_runner.invoke(
            decoding_dynamics.cli.main,
            ["runtime", "--input", str(runtime_spec_file), "--out-dir", str(out_dir)],
            catch_exceptions=False,
        )
        assert result.exit_code == 0
        report = read_json(out_dir / "runtime_report.json")
        assert report["skipped_m"] == [2, 8]
        assert len(report["tradeoffs"]) == 1
        tradeoff = report["tradeoffs"][0]
        assert tradeoff["m"] == 1
        assert tradeoff["k_rounds"] == 7
        assert tradeoff["no_slowdown"] is True

    def test_unavailable_alpha(self, cli_runner, runtime_spec_file, tmp_path):
        """Test a stage count without contraction coefficient."""
        result = cli_runner.invoke(
            decoding_dynamics.cli.main,
            ["runtime", "--input", str(runtime_spec_file), "--out-dir", str(tmp_path), "--m", "2"],
        )
        assert result.exit_code == 50
        assert "[runtime-model] alpha(2) is unavailable" in result.output

    def test_m0_override(self, cli_runner, runtime_spec_file, tmp_path):
        """Test overriding the baseline stage count."""
        result = cli_runner.invoke(
            decoding_dynamics.cli.main,
            [
                "runtime",
                "--input",
                str(runtime_spec_file),
                "--out-dir",
                str(tmp_path),
                "--m0",
                "2",
                "--m",
                "1",
            ],
            catch_exceptions=False,
        )
        assert result.exit_code == 0
        report = read_json(tmp_path / "runtime_report.json")
        assert report["tradeoffs"][0]["binding_inequality"] == "7 x 1 = 7 > 2 x 1 = 2"
