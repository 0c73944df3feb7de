"""The full experiment pipeline, end to end, without touching a network.

Executes the complete 6-configuration x 2-regime x 32-replication factorial
with the deterministic stub model, then runs the analysis pass and the
report pass over the persisted store.  Everything lands under
demos/output/; delete the directory and rerun to get byte-identical files.
"""

import shutil
import time
from pathlib import Path

from beerlab.analysis import analyze_store
from beerlab.experiment import execute, plan_from_dict
from beerlab.figures import render_reports

OUT = Path(__file__).parent / "output"

PLAN = {
    "master_seed": 42,
    "replications": 32,
    "profiles": {
        "shallow": {"model_id": "stub-shallow", "family": "A"},
        "deep": {"model_id": "stub-deep", "family": "B"},
    },
}


def main():
    if OUT.exists():
        shutil.rmtree(OUT)
    store = OUT / "store"
    plan = plan_from_dict(PLAN)

    started = time.perf_counter()
    summary = execute(plan, store, mode="stub", parallelism=4)
    print(f"executed {summary.completed} cells in "
          f"{time.perf_counter() - started:.2f}s "
          f"({summary.skipped} skipped, {summary.failed} failed)")

    analysis = analyze_store(store, OUT / "analysis")
    print(f"analysis: {len(analysis['groups'])} groups, "
          f"{len(analysis['is_effect'])} information-sharing comparisons")
    print((OUT / "analysis" / "is_effect_table.txt").read_text())

    info = render_reports(store, OUT / "report")
    print(f"report: {info['groups']} groups rendered into {info['out']}")


if __name__ == "__main__":
    main()
