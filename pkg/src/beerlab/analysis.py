"""Turns a store of completed cells into the report tables.

Every emitted number is recomputable from the persisted traces alone, and
output bytes are canonical: re-running the analysis over the same store
produces identical files.
"""

from __future__ import annotations

import json
from collections import defaultdict
from pathlib import Path

from .engine import BeerLabError
from .experiment import load_completed_cells
from .stats import (
    bullwhip_report,
    cost_summary,
    fit_ordering_regression,
    mann_whitney_u,
    myopia_sign_test,
    run_variance_statistic,
    welch_t_test,
)

ANALYSIS_SCHEMA = "beerlab.analysis.v1"


def _fmt(x) -> str:
    if isinstance(x, float):
        return repr(x)
    return str(x)


def _write_csv(path: Path, header, rows) -> None:
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(_fmt(v) for v in row))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def group_cells(cells):
    """{(configuration, regime): [(replication, trace), ...]} sorted by rep."""
    groups = defaultdict(list)
    for configuration, regime, rep, trace, _header in cells:
        groups[(configuration, regime)].append((rep, trace))
    for key in groups:
        groups[key].sort(key=lambda pair: pair[0])
    return dict(groups)


def analyze_store(store, out_dir) -> dict:
    """Full analysis pass; returns the summary dict it also writes to disk."""
    cells = load_completed_cells(store)
    if not cells:
        raise BeerLabError(f"no complete cells under {store}")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    groups = group_cells(cells)

    summary = {"schema": ANALYSIS_SCHEMA, "groups": {}, "is_effect": {}}

    # --- bullwhip, myopia, and cost aggregates per (configuration, regime)
    bullwhip_rows = []
    myopia_rows = []
    cost_rows = []
    for (configuration, regime), pairs in sorted(groups.items()):
        traces = [trace for _rep, trace in pairs]
        cell_ids = [f"{configuration}__{regime}__rep{rep:03d}" for rep, _ in pairs]

        bw = bullwhip_report(traces)
        fits = [fit_ordering_regression(trace, stage)
                for trace in traces for stage in range(1, 5)]
        myopia = myopia_sign_test(fits)
        costs = cost_summary(traces)

        bullwhip_rows.append([
            configuration, regime, int(bw.statistic), bw.n, bw.p_value,
            bw.details["amplification_end_to_end"],
            bw.details["amplification_mean_adjacent"],
        ])
        myopia_rows.append([
            configuration, regime, int(myopia.statistic), myopia.n,
            myopia.details["invalid_fits"], myopia.p_value,
        ])
        cost_rows.append([
            configuration, "W/ IS" if regime == "shared" else "W/O IS",
            costs["total_cost_mean"], costs["var_mean"], costs["var_median"],
            costs["var_std"],
        ])
        summary["groups"][f"{configuration}/{regime}"] = {
            "cells": cell_ids,
            "bullwhip": {"k": int(bw.statistic), "n": bw.n, "p": bw.p_value,
                         **bw.details},
            "myopia": {"k": int(myopia.statistic), "n": myopia.n,
                       "p": myopia.p_value,
                       "invalid_fits": myopia.details["invalid_fits"]},
            "costs": costs,
        }

    _write_csv(out / "bullwhip.csv",
               ["configuration", "regime", "k", "n", "p_value",
                "amplification_end_to_end", "amplification_mean_adjacent"],
               bullwhip_rows)
    _write_csv(out / "myopia.csv",
               ["configuration", "regime", "k", "n_valid", "n_invalid", "p_value"],
               myopia_rows)
    _write_csv(out / "costs.csv",
               ["configuration", "condition", "total_cost_mean",
                "var_mean", "var_median", "var_std"],
               cost_rows)

    # --- information-sharing effect per configuration
    is_rows = []
    table_blocks = []
    configurations = sorted({c for c, _ in groups})
    for configuration in configurations:
        iso = groups.get((configuration, "isolated"))
        shr = groups.get((configuration, "shared"))
        if not iso or not shr:
            continue
        vars_iso = [run_variance_statistic(t) for _r, t in iso]
        vars_shr = [run_variance_statistic(t) for _r, t in shr]
        stats_iso = cost_summary([t for _r, t in iso])
        stats_shr = cost_summary([t for _r, t in shr])
        _u, p_mwu = mann_whitney_u(vars_iso, vars_shr, sided="greater")
        _t, _dof, p_t = welch_t_test(vars_iso, vars_shr, sided="greater")
        is_rows.append([
            configuration,
            stats_iso["var_mean"], stats_iso["var_std"], stats_iso["var_median"],
            stats_shr["var_mean"], stats_shr["var_std"], stats_shr["var_median"],
            p_t, p_mwu,
        ])
        summary["is_effect"][configuration] = {
            "without_is": {"mean": stats_iso["var_mean"], "sd": stats_iso["var_std"],
                           "median": stats_iso["var_median"]},
            "with_is": {"mean": stats_shr["var_mean"], "sd": stats_shr["var_std"],
                        "median": stats_shr["var_median"]},
            "p_t_test": p_t,
            "p_mann_whitney": p_mwu,
        }
        table_blocks.append("\n".join([
            f"== {configuration} ==",
            f"{'':10s} {'Mean (S.D.)':>22s} {'Med.':>10s}",
            f"{'W/O IS':10s} {stats_iso['var_mean']:.2f} ({stats_iso['var_std']:.2f})"
            f"{'':>6s} {stats_iso['var_median']:>10.2f}",
            f"{'W/ IS':10s} {stats_shr['var_mean']:.2f} ({stats_shr['var_std']:.2f})"
            f"{'':>6s} {stats_shr['var_median']:>10.2f}",
            f"{'p-value':10s} {p_t:>22.4g} {p_mwu:>10.4g}",
            f"{'Test':10s} {'t-test':>22s} {'M.W.':>10s}",
        ]))
    _write_csv(out / "is_effect.csv",
               ["configuration", "wo_is_mean", "wo_is_sd", "wo_is_median",
                "w_is_mean", "w_is_sd", "w_is_median", "p_t_test", "p_mann_whitney"],
               is_rows)
    (out / "is_effect_table.txt").write_text(
        "\n\n".join(table_blocks) + "\n" if table_blocks else "", encoding="utf-8")

    (out / "summary.json").write_text(
        json.dumps(summary, sort_keys=True, indent=2) + "\n", encoding="utf-8")
    return summary
