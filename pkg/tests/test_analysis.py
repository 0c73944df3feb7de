import json

import pytest

from beerlab.analysis import analyze_store
from beerlab.engine import BeerLabError
from beerlab.experiment import execute, plan_from_dict
from beerlab.figures import render_reports


@pytest.fixture(scope="module")
def stub_store(tmp_path_factory):
    plan = plan_from_dict({
        "master_seed": 42,
        "replications": 3,
        "configurations": ["Original", "R-S2"],
        "regimes": ["isolated", "shared"],
        "profiles": {
            "shallow": {"model_id": "stub-shallow", "family": "A"},
            "deep": {"model_id": "stub-deep", "family": "A"},
        },
    })
    store = tmp_path_factory.mktemp("store")
    summary = execute(plan, store, mode="stub", parallelism=4)
    assert summary.all_complete
    return store


class TestAnalyzeStore:
    def test_emits_all_tables(self, stub_store, tmp_path):
        out = tmp_path / "analysis"
        summary = analyze_store(stub_store, out)
        for name in ("bullwhip.csv", "myopia.csv", "costs.csv",
                     "is_effect.csv", "is_effect_table.txt", "summary.json"):
            assert (out / name).exists(), name
        assert set(summary["groups"]) == {
            "Original/isolated", "Original/shared",
            "R-S2/isolated", "R-S2/shared",
        }
        assert set(summary["is_effect"]) == {"Original", "R-S2"}

    def test_summary_file_matches_return_value(self, stub_store, tmp_path):
        out = tmp_path / "analysis"
        summary = analyze_store(stub_store, out)
        on_disk = json.loads((out / "summary.json").read_text())
        assert on_disk == json.loads(json.dumps(summary))

    def test_group_contents(self, stub_store, tmp_path):
        summary = analyze_store(stub_store, tmp_path / "a")
        group = summary["groups"]["Original/isolated"]
        assert group["cells"] == [f"Original__isolated__rep{r:03d}" for r in range(3)]
        assert group["bullwhip"]["n"] == 3 * 3
        assert 0.0 <= group["bullwhip"]["p"] <= 1.0
        assert group["myopia"]["n"] + group["myopia"]["invalid_fits"] == 3 * 4
        assert group["costs"]["runs"] == 3
        assert group["costs"]["total_cost_mean"] > 0

    def test_is_effect_probabilities(self, stub_store, tmp_path):
        summary = analyze_store(stub_store, tmp_path / "a")
        for block in summary["is_effect"].values():
            assert 0.0 <= block["p_t_test"] <= 1.0
            assert 0.0 <= block["p_mann_whitney"] <= 1.0
            assert block["without_is"]["mean"] >= 0

    def test_reruns_byte_identical(self, stub_store, tmp_path):
        out_a, out_b = tmp_path / "a", tmp_path / "b"
        analyze_store(stub_store, out_a)
        analyze_store(stub_store, out_b)
        for path in sorted(out_a.iterdir()):
            assert path.read_bytes() == (out_b / path.name).read_bytes(), path.name

    def test_table_text_shape(self, stub_store, tmp_path):
        out = tmp_path / "a"
        analyze_store(stub_store, out)
        text = (out / "is_effect_table.txt").read_text()
        assert "== Original ==" in text
        assert "W/O IS" in text and "W/ IS" in text
        assert "t-test" in text and "M.W." in text

    def test_csv_row_counts(self, stub_store, tmp_path):
        out = tmp_path / "a"
        analyze_store(stub_store, out)
        assert len((out / "bullwhip.csv").read_text().splitlines()) == 1 + 4
        assert len((out / "costs.csv").read_text().splitlines()) == 1 + 4
        assert len((out / "is_effect.csv").read_text().splitlines()) == 1 + 2

    def test_empty_store_rejected(self, tmp_path):
        with pytest.raises(BeerLabError):
            analyze_store(tmp_path / "empty", tmp_path / "out")


class TestRenderReports:
    def test_emits_tables_and_figures(self, stub_store, tmp_path):
        out = tmp_path / "report"
        info = render_reports(stub_store, out, draw=True)
        assert info["groups"] == 4
        for name in ("trajectories.csv", "variance_box.csv", "stage_variance.csv",
                     "variance_box.svg", "stage_variance.svg",
                     "trajectories_Original_isolated.svg",
                     "trajectories_R-S2_shared.svg"):
            assert (out / name).exists(), name

    def test_trajectory_table_shape(self, stub_store, tmp_path):
        out = tmp_path / "report"
        render_reports(stub_store, out, draw=False)
        lines = (out / "trajectories.csv").read_text().splitlines()
        # 4 groups x 4 stages x 20 periods
        assert len(lines) == 1 + 4 * 4 * 20
        assert lines[0] == "configuration,regime,stage,period,mean_order,q1,q3"
        assert not any(p.suffix == ".svg" for p in out.iterdir())

    def test_stage_variance_rows(self, stub_store, tmp_path):
        out = tmp_path / "report"
        render_reports(stub_store, out, draw=False)
        lines = (out / "stage_variance.csv").read_text().splitlines()
        assert len(lines) == 1 + 4 * 4
        for line in lines[1:]:
            assert float(line.rsplit(",", 1)[1]) >= 0.0

    def test_reruns_byte_identical(self, stub_store, tmp_path):
        out_a, out_b = tmp_path / "a", tmp_path / "b"
        render_reports(stub_store, out_a, draw=False)
        render_reports(stub_store, out_b, draw=False)
        for path in sorted(out_a.iterdir()):
            assert path.read_bytes() == (out_b / path.name).read_bytes()

    def test_empty_store_rejected(self, tmp_path):
        with pytest.raises(BeerLabError):
            render_reports(tmp_path / "empty", tmp_path / "out")
