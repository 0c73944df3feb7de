import json

import pytest
import yaml
from click.testing import CliRunner

from beerlab.cli import main
from beerlab.serialize import read_trace


@pytest.fixture()
def runner():
    return CliRunner()


@pytest.fixture()
def plan_file(tmp_path, stub_plan_dict):
    stub_plan_dict["replications"] = 2
    path = tmp_path / "plan.yaml"
    path.write_text(yaml.safe_dump(stub_plan_dict))
    return path


class TestSimulate:
    def test_writes_trace(self, runner, tmp_path):
        out = tmp_path / "trace.jsonl"
        result = runner.invoke(main, ["simulate", "--policy", "constant",
                                      "--quantity", "4", "--seed", "3",
                                      "--horizon", "10", "--out", str(out)])
        assert result.exit_code == 0, result.output
        trace, header = read_trace(out)
        assert len(trace.periods) == 10
        assert header["policies"] == ["constant"] * 4
        assert "system cost" in result.output

    def test_policy_choices_validated(self, runner, tmp_path):
        result = runner.invoke(main, ["simulate", "--policy", "wizard",
                                      "--out", str(tmp_path / "t.jsonl")])
        assert result.exit_code == 2

    def test_deterministic_across_invocations(self, runner, tmp_path):
        args = ["simulate", "--policy", "panic", "--seed", "8"]
        a, b = tmp_path / "a.jsonl", tmp_path / "b.jsonl"
        assert runner.invoke(main, args + ["--out", str(a)]).exit_code == 0
        assert runner.invoke(main, args + ["--out", str(b)]).exit_code == 0
        assert a.read_bytes() == b.read_bytes()


class TestExperiment:
    def test_full_stub_run(self, runner, tmp_path, plan_file):
        store = tmp_path / "store"
        result = runner.invoke(main, ["experiment", "--plan", str(plan_file),
                                      "--out", str(store), "--mode", "stub"])
        assert result.exit_code == 0, result.output
        assert "8 completed" in result.output
        assert (store / "manifest.json").exists()
        assert len(list((store / "cells").iterdir())) == 8

    def test_missing_plan_exits_2(self, runner, tmp_path):
        result = runner.invoke(main, ["experiment", "--plan", str(tmp_path / "nope.yaml"),
                                      "--out", str(tmp_path / "s")])
        assert result.exit_code == 2

    def test_invalid_plan_exits_2(self, runner, tmp_path):
        bad = tmp_path / "bad.yaml"
        bad.write_text(yaml.safe_dump({"replications": 3}))
        result = runner.invoke(main, ["experiment", "--plan", str(bad),
                                      "--out", str(tmp_path / "s")])
        assert result.exit_code == 2
        assert "master_seed" in result.output

    def test_failed_cells_exit_1(self, runner, tmp_path, plan_file):
        result = runner.invoke(main, ["experiment", "--plan", str(plan_file),
                                      "--out", str(tmp_path / "s"),
                                      "--mode", "live",
                                      "--filter", "Original/isolated/*"])
        assert result.exit_code == 1
        assert "failed" in result.output

    def test_resume_reports_skips(self, runner, tmp_path, plan_file):
        store = tmp_path / "store"
        runner.invoke(main, ["experiment", "--plan", str(plan_file),
                             "--out", str(store)])
        result = runner.invoke(main, ["experiment", "--plan", str(plan_file),
                                      "--out", str(store)])
        assert result.exit_code == 0
        assert "8 resumed-skip" in result.output

    def test_replay_without_root_exits_2(self, runner, tmp_path, plan_file):
        result = runner.invoke(main, ["experiment", "--plan", str(plan_file),
                                      "--out", str(tmp_path / "s"),
                                      "--mode", "replay"])
        assert result.exit_code == 2


class TestAnalyzeReportReplay:
    @pytest.fixture()
    def store(self, runner, tmp_path, plan_file):
        store = tmp_path / "store"
        result = runner.invoke(main, ["experiment", "--plan", str(plan_file),
                                      "--out", str(store), "--parallel", "4"])
        assert result.exit_code == 0, result.output
        return store

    def test_analyze(self, runner, tmp_path, store):
        out = tmp_path / "analysis"
        result = runner.invoke(main, ["analyze", "--store", str(store),
                                      "--out", str(out)])
        assert result.exit_code == 0, result.output
        assert (out / "summary.json").exists()
        summary = json.loads((out / "summary.json").read_text())
        assert len(summary["groups"]) == 4

    def test_analyze_empty_store_exits_1(self, runner, tmp_path):
        result = runner.invoke(main, ["analyze", "--store", str(tmp_path / "none"),
                                      "--out", str(tmp_path / "out")])
        assert result.exit_code == 1

    def test_report(self, runner, tmp_path, store):
        out = tmp_path / "report"
        result = runner.invoke(main, ["report", "--store", str(store),
                                      "--out", str(out), "--no-draw"])
        assert result.exit_code == 0, result.output
        assert (out / "trajectories.csv").exists()
        assert not list(out.glob("*.svg"))

    def test_replay_verifies_traces(self, runner, tmp_path, store, plan_file):
        result = runner.invoke(main, ["replay", "--plan", str(plan_file),
                                      "--source", str(store),
                                      "--out", str(tmp_path / "replayed")])
        assert result.exit_code == 0, result.output
        assert "byte-identical" in result.output

    def test_replay_detects_tampering(self, runner, tmp_path, store, plan_file):
        # corrupt one recorded order; the replayed trace must diverge
        cell = sorted((store / "cells").iterdir())[0]
        path = cell / "transcripts.jsonl"
        lines = path.read_text().splitlines()
        record = json.loads(lines[0])
        record["parsed_order"] = (record["parsed_order"] + 3) % 9
        lines[0] = json.dumps(record, sort_keys=True, separators=(",", ":"))
        path.write_text("\n".join(lines) + "\n")
        result = runner.invoke(main, ["replay", "--plan", str(plan_file),
                                      "--source", str(store),
                                      "--out", str(tmp_path / "replayed")])
        assert result.exit_code == 1
        assert "mismatch" in result.output


def test_help_lists_all_subcommands(runner=None):
    runner = CliRunner()
    result = runner.invoke(main, ["--help"])
    assert result.exit_code == 0
    for name in ("simulate", "experiment", "analyze", "replay", "report"):
        assert name in result.output
