import json
import socket

import pytest
import yaml

from beerlab.engine import BeerLabError, GameConfig
from beerlab.experiment import (
    CONFIGURATIONS,
    ExperimentPlan,
    PlanError,
    cell_id,
    execute,
    load_completed_cells,
    load_plan,
    plan_from_dict,
    plan_hash,
    tier_assignment,
)
from beerlab.serialize import read_trace


class TestTierAssignment:
    def test_original_all_shallow(self):
        assert tier_assignment("Original") == ("shallow",) * 4

    def test_r_overall_all_deep(self):
        assert tier_assignment("R-Overall") == ("deep",) * 4

    @pytest.mark.parametrize("name,deep_index", [
        ("R-S1", 0), ("R-S2", 1), ("R-S3", 2), ("R-S4", 3),
    ])
    def test_single_stage_replacements(self, name, deep_index):
        tiers = tier_assignment(name)
        assert tiers[deep_index] == "deep"
        assert tiers.count("shallow") == 3

    def test_unknown_configuration(self):
        with pytest.raises(PlanError):
            tier_assignment("R-S9")


class TestPlanParsing:
    def test_full_plan(self, stub_plan_dict):
        plan = plan_from_dict(stub_plan_dict)
        assert plan.master_seed == 42
        assert plan.replications == 2
        assert plan.configurations == ("Original", "R-S2")
        assert plan.regimes == ("isolated", "shared")
        assert plan.game == GameConfig()
        assert set(plan.profiles) == {"shallow", "deep"}
        assert plan.profiles["deep"].model_id == "stub-deep"
        assert len(list(plan.cells())) == 2 * 2 * 2

    def test_defaults(self, stub_plan_dict):
        del stub_plan_dict["configurations"]
        del stub_plan_dict["regimes"]
        del stub_plan_dict["replications"]
        plan = plan_from_dict(stub_plan_dict)
        assert plan.configurations == CONFIGURATIONS
        assert plan.replications == 32
        assert len(list(plan.cells())) == 6 * 2 * 32

    def test_game_overrides(self, stub_plan_dict):
        stub_plan_dict["game"] = {"horizon": 8, "order_cap_enabled": True}
        plan = plan_from_dict(stub_plan_dict)
        assert plan.game.horizon == 8
        assert plan.game.order_cap_enabled is True
        assert plan.game.ship_delay == 2

    @pytest.mark.parametrize("mutate,fragment", [
        (lambda d: d.pop("master_seed"), "master_seed"),
        (lambda d: d.update(master_seed="seven"), "master_seed"),
        (lambda d: d.update(replications=0), "replications"),
        (lambda d: d.update(configurations=["Improved"]), "unknown name"),
        (lambda d: d.update(regimes=["open"]), "unknown regime"),
        (lambda d: d.update(policy={"kind": "wizard"}), "unknown kind"),
        (lambda d: d.update(profiles={"medium": {"model_id": "m"}}), "unknown tier"),
        (lambda d: d.pop("profiles"), "required for llm"),
    ])
    def test_validation_failures_name_the_field(self, stub_plan_dict, mutate, fragment):
        mutate(stub_plan_dict)
        with pytest.raises(PlanError, match=fragment):
            plan_from_dict(stub_plan_dict)

    def test_scripted_plan_needs_no_profiles(self, stub_plan_dict):
        del stub_plan_dict["profiles"]
        stub_plan_dict["policy"] = {"kind": "tracking"}
        plan = plan_from_dict(stub_plan_dict)
        assert plan.policy.kind == "tracking"

    def test_load_plan_yaml(self, tmp_path, stub_plan_dict):
        path = tmp_path / "plan.yaml"
        path.write_text(yaml.safe_dump(stub_plan_dict))
        assert load_plan(path) == plan_from_dict(stub_plan_dict)

    def test_load_plan_bad_yaml(self, tmp_path):
        path = tmp_path / "plan.yaml"
        path.write_text("{a: [")
        with pytest.raises(PlanError):
            load_plan(path)

    def test_plan_hash_tracks_content(self, stub_plan_dict):
        h1 = plan_hash(plan_from_dict(stub_plan_dict))
        stub_plan_dict["master_seed"] = 43
        h2 = plan_hash(plan_from_dict(stub_plan_dict))
        assert h1 != h2


def test_cell_id_format():
    assert cell_id("R-S2", "shared", 7) == "R-S2__shared__rep007"


class TestExecution:
    def test_stub_run_produces_all_cells(self, tmp_path, stub_plan_dict):
        plan = plan_from_dict(stub_plan_dict)
        summary = execute(plan, tmp_path / "store", mode="stub")
        assert summary.attempted == 8
        assert summary.completed == 8
        assert summary.all_complete
        cells = load_completed_cells(tmp_path / "store")
        assert len(cells) == 8
        for configuration, regime, rep, trace, header in cells:
            assert len(trace.periods) == 20
            assert trace.regime == regime
            expected = [plan.profiles[t].model_id for t in tier_assignment(configuration)]
            assert header["policies"] == expected
        # transcripts exist alongside every trace
        for cell_dir in sorted((tmp_path / "store" / "cells").iterdir()):
            assert (cell_dir / "transcripts.jsonl").exists()

    def test_resume_skips_completed_cells(self, tmp_path, stub_plan_dict):
        plan = plan_from_dict(stub_plan_dict)
        store = tmp_path / "store"
        execute(plan, store, mode="stub", cell_filter="Original/*/*")
        before = {p: p.read_bytes()
                  for p in store.rglob("trace.jsonl")}
        summary = execute(plan, store, mode="stub")
        assert summary.skipped == 4
        assert summary.completed == 4
        for path, content in before.items():
            assert path.read_bytes() == content

    def test_reruns_are_byte_identical(self, tmp_path, stub_plan_dict):
        plan = plan_from_dict(stub_plan_dict)
        execute(plan, tmp_path / "a", mode="stub")
        execute(plan, tmp_path / "b", mode="stub", parallelism=4)
        for rel in sorted(p.relative_to(tmp_path / "a")
                          for p in (tmp_path / "a").rglob("*.jsonl")):
            assert (tmp_path / "a" / rel).read_bytes() == \
                (tmp_path / "b" / rel).read_bytes(), rel

    def test_mismatched_plan_store_rejected(self, tmp_path, stub_plan_dict):
        store = tmp_path / "store"
        execute(plan_from_dict(stub_plan_dict), store, mode="stub",
                cell_filter="Original/isolated/0")
        stub_plan_dict["master_seed"] = 99
        with pytest.raises(BeerLabError, match="different plan"):
            execute(plan_from_dict(stub_plan_dict), store, mode="stub")

    def test_cell_filter(self, tmp_path, stub_plan_dict):
        plan = plan_from_dict(stub_plan_dict)
        summary = execute(plan, tmp_path / "store", mode="stub",
                          cell_filter="R-S2/shared/*")
        assert summary.attempted == 2
        names = [c.name for c in sorted((tmp_path / "store" / "cells").iterdir())]
        assert names == ["R-S2__shared__rep000", "R-S2__shared__rep001"]

    def test_scripted_cells_touch_no_network(self, tmp_path, stub_plan_dict,
                                             monkeypatch):
        def explode(*args, **kwargs):
            raise AssertionError("network access attempted")

        monkeypatch.setattr(socket.socket, "connect", explode)
        del stub_plan_dict["profiles"]
        stub_plan_dict["policy"] = {"kind": "panic", "params": {"alpha": 1.0, "beta": 0.2}}
        summary = execute(plan_from_dict(stub_plan_dict), tmp_path / "store")
        assert summary.all_complete

    def test_failed_cell_recorded_not_raised(self, tmp_path, stub_plan_dict):
        plan = plan_from_dict(stub_plan_dict)
        store = tmp_path / "store"
        # live mode with no endpoint configured fails inside the cell
        summary = execute(plan, store, mode="live", cell_filter="Original/isolated/0")
        assert summary.failed == 1
        assert not summary.all_complete
        status = json.loads(
            (store / "cells" / "Original__isolated__rep000" / "status.json").read_text())
        assert status["status"] == "failed"
        assert load_completed_cells(store) == []

    def test_failed_cell_retried_on_resume(self, tmp_path, stub_plan_dict):
        plan = plan_from_dict(stub_plan_dict)
        store = tmp_path / "store"
        execute(plan, store, mode="live", cell_filter="Original/isolated/0")
        summary = execute(plan, store, mode="stub", cell_filter="Original/isolated/0")
        assert summary.completed == 1

    def test_replay_mode_reproduces_traces(self, tmp_path, stub_plan_dict):
        plan = plan_from_dict(stub_plan_dict)
        source = tmp_path / "source"
        target = tmp_path / "target"
        execute(plan, source, mode="stub")
        execute(plan, target, mode="replay", replay_root=source)
        for configuration, regime, rep, trace, _ in load_completed_cells(target):
            original, _ = read_trace(
                source / "cells" / cell_id(configuration, regime, rep) / "trace.jsonl")
            assert trace == original

    def test_demand_paired_across_cells(self, tmp_path, stub_plan_dict):
        execute(plan_from_dict(stub_plan_dict), tmp_path / "store", mode="stub")
        cells = load_completed_cells(tmp_path / "store")
        by_rep = {}
        for configuration, regime, rep, trace, _ in cells:
            by_rep.setdefault(rep, []).append([r.demand for r in trace.periods])
        for rep, paths in by_rep.items():
            assert all(p == paths[0] for p in paths)
        assert by_rep[0][0] != by_rep[1][0]
