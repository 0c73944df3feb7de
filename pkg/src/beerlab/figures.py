"""Figure emission: order trajectories, variance box plots, stage variance bars.

The plots are decoration; every number they draw also lands in a delimited
table next to them, and the tables are the contract.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .engine import BeerLabError
from .experiment import load_completed_cells
from .analysis import _write_csv, group_cells
from .stats import order_variance, run_variance_statistic

STAGE_NAMES = ("S1 retailer", "S2 wholesaler", "S3 distributor", "S4 manufacturer")


def _quartiles(values) -> tuple:
    q1, med, q3 = (float(q) for q in np.percentile(values, [25, 50, 75]))
    iqr = q3 - q1
    lo = float(min(v for v in values if v >= q1 - 1.5 * iqr))
    hi = float(max(v for v in values if v <= q3 + 1.5 * iqr))
    return q1, med, q3, lo, hi


def render_reports(store, out_dir, draw: bool = True) -> dict:
    """Emit trajectory, box-plot, and bar-chart tables (plus SVGs)."""
    cells = load_completed_cells(store)
    if not cells:
        raise BeerLabError(f"no complete cells under {store}")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    groups = group_cells(cells)

    trajectory_rows = []
    box_rows = []
    bar_rows = []
    trajectories = {}
    for (configuration, regime), pairs in sorted(groups.items()):
        traces = [trace for _rep, trace in pairs]
        horizon = traces[0].horizon
        per_stage = {}
        for stage in range(1, 5):
            orders = np.array([[rec.orders[stage - 1] for rec in t.periods]
                               for t in traces], dtype=float)
            mean = orders.mean(axis=0)
            q1 = np.percentile(orders, 25, axis=0)
            q3 = np.percentile(orders, 75, axis=0)
            per_stage[stage] = (mean, q1, q3)
            for t in range(horizon):
                trajectory_rows.append([configuration, regime, stage, t + 1,
                                        float(mean[t]), float(q1[t]), float(q3[t])])
            stage_vars = [float(order_variance(trace, stage)) for trace in traces]
            bar_rows.append([configuration, regime, stage,
                             float(np.mean(stage_vars))])
        trajectories[(configuration, regime)] = per_stage

        run_vars = [run_variance_statistic(t) for t in traces]
        box_rows.append([configuration, regime, *_quartiles(run_vars),
                         float(np.mean(run_vars))])

    _write_csv(out / "trajectories.csv",
               ["configuration", "regime", "stage", "period",
                "mean_order", "q1", "q3"], trajectory_rows)
    _write_csv(out / "variance_box.csv",
               ["configuration", "regime", "q1", "median", "q3",
                "whisker_low", "whisker_high", "mean"], box_rows)
    _write_csv(out / "stage_variance.csv",
               ["configuration", "regime", "stage", "mean_variance"], bar_rows)

    if draw:
        _draw_figures(out, trajectories, box_rows, bar_rows)
    return {"groups": len(groups), "out": str(out)}


def _draw_figures(out: Path, trajectories, box_rows, bar_rows) -> None:
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    for (configuration, regime), per_stage in trajectories.items():
        fig, ax = plt.subplots(figsize=(7, 4))
        for stage, (mean, q1, q3) in per_stage.items():
            periods = np.arange(1, len(mean) + 1)
            ax.plot(periods, mean, label=STAGE_NAMES[stage - 1])
            ax.fill_between(periods, q1, q3, alpha=0.15)
        ax.set_xlabel("period")
        ax.set_ylabel("mean order (IQR band)")
        ax.set_title(f"Order trajectories: {configuration}, {regime}")
        ax.legend(fontsize=8)
        fig.tight_layout()
        fig.savefig(out / f"trajectories_{configuration}_{regime}.svg")
        plt.close(fig)

    fig, ax = plt.subplots(figsize=(8, 4))
    labels = [f"{row[0]}\n{row[1]}" for row in box_rows]
    stats = [
        {"q1": row[2], "med": row[3], "q3": row[4],
         "whislo": row[5], "whishi": row[6], "mean": row[7], "label": lbl}
        for row, lbl in zip(box_rows, labels)
    ]
    ax.bxp(stats, showfliers=False, showmeans=True)
    ax.set_ylabel("per-run mean order variance")
    ax.tick_params(axis="x", labelsize=7)
    fig.tight_layout()
    fig.savefig(out / "variance_box.svg")
    plt.close(fig)

    fig, ax = plt.subplots(figsize=(8, 4))
    keys = sorted({(row[0], row[1]) for row in bar_rows})
    width = 0.8 / max(len(keys), 1)
    for i, key in enumerate(keys):
        vals = [row[3] for row in bar_rows if (row[0], row[1]) == key]
        xs = np.arange(1, 5) + (i - len(keys) / 2) * width
        ax.bar(xs, vals, width=width, label=f"{key[0]}/{key[1]}")
    ax.set_xticks(np.arange(1, 5))
    ax.set_xticklabels([n.split()[0] for n in STAGE_NAMES])
    ax.set_ylabel("mean order variance")
    ax.legend(fontsize=7)
    fig.tight_layout()
    fig.savefig(out / "stage_variance.svg")
    plt.close(fig)
