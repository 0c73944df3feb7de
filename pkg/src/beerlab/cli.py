"""Command-line surface: simulate, experiment, analyze, replay, report.

Exit codes are a stable contract: 0 success, 1 runtime or partial failure,
2 usage/config error.
"""

from __future__ import annotations

import sys
from pathlib import Path

import click

from .engine import BeerLabError, GameConfig, run_game
from .experiment import PlanError, execute, load_plan
from .policies import ConstantPolicy, MatchDemandPolicy, PanicPolicy, tracking_demand_team
from .serialize import write_trace


@click.group()
def main():
    """Deterministic Beer Distribution Game laboratory."""


def _scripted_team(policy: str, config: GameConfig, quantity: int,
                   alpha: float, beta: float):
    if policy == "constant":
        return [ConstantPolicy(quantity) for _ in range(4)]
    if policy == "match_demand":
        return [MatchDemandPolicy() for _ in range(4)]
    if policy == "panic":
        return [PanicPolicy(alpha=alpha, beta=beta, target=config.initial_inventory)
                for _ in range(4)]
    return tracking_demand_team(config)


@main.command()
@click.option("--policy", type=click.Choice(["tracking", "constant", "match_demand", "panic"]),
              default="tracking", show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--horizon", type=int, default=20, show_default=True)
@click.option("--regime", type=click.Choice(["isolated", "shared"]), default="isolated",
              show_default=True)
@click.option("--quantity", type=int, default=4, help="order size for the constant policy")
@click.option("--alpha", type=float, default=1.0, help="panic stock-gap weight")
@click.option("--beta", type=float, default=0.2, help="panic supply-line weight")
@click.option("--out", type=click.Path(dir_okay=False), required=True,
              help="trace file to write (JSONL)")
def simulate(policy, seed, horizon, regime, quantity, alpha, beta, out):
    """Run one scripted game and write its trace."""
    config = GameConfig(horizon=horizon, order_cap_enabled=(policy == "tracking"))
    team = _scripted_team(policy, config, quantity, alpha, beta)
    trace = run_game(config, team, seed, regime=regime)
    write_trace(out, trace, policy_ids=[policy] * 4)
    total = sum(trace.total_cost_per_stage)
    click.echo(f"wrote {out}: {horizon} periods, system cost {float(total)}")


@main.command()
@click.option("--plan", "plan_path", type=click.Path(exists=False, dir_okay=False), required=True)
@click.option("--out", "store", type=click.Path(file_okay=False), required=True)
@click.option("--mode", type=click.Choice(["live", "stub", "replay"]), default="stub",
              show_default=True)
@click.option("--parallel", type=int, default=1, show_default=True)
@click.option("--filter", "cell_filter", default="", help="CONFIG/REGIME/REP glob, e.g. R-S1/shared/*")
@click.option("--replay-root", type=click.Path(file_okay=False), default=None,
              help="store holding the transcripts to replay (replay mode)")
def experiment(plan_path, store, mode, parallel, cell_filter, replay_root):
    """Execute the factorial plan, resuming past completed cells."""
    if not Path(plan_path).exists():
        click.echo(f"error: plan file {plan_path} does not exist", err=True)
        sys.exit(2)
    try:
        plan = load_plan(plan_path)
    except PlanError as exc:
        click.echo(f"plan error: {exc}", err=True)
        sys.exit(2)
    if mode == "replay" and not replay_root and plan.policy.kind == "llm":
        click.echo("error: replay mode requires --replay-root", err=True)
        sys.exit(2)

    def progress(result):
        click.echo(f"[{result.status:>8s}] {result.configuration}/{result.regime}"
                   f"/rep{result.replication:03d}")

    summary = execute(plan, store, mode=mode, parallelism=parallel,
                      cell_filter=cell_filter, replay_root=replay_root,
                      progress=progress)
    click.echo(f"cells: {summary.attempted} attempted, {summary.completed} completed, "
               f"{summary.skipped} resumed-skip, {summary.failed} failed")
    if summary.failed:
        for result in summary.results:
            if result.status == "failed":
                click.echo(f"failed: {result.configuration}/{result.regime}"
                           f"/rep{result.replication:03d}: {result.reason}", err=True)
        sys.exit(1)


@main.command()
@click.option("--store", type=click.Path(file_okay=False), required=True)
@click.option("--out", "out_dir", type=click.Path(file_okay=False), required=True)
def analyze(store, out_dir):
    """Compute bullwhip, information-sharing, myopia, and cost tables."""
    from .analysis import analyze_store

    try:
        summary = analyze_store(store, out_dir)
    except BeerLabError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(1)
    click.echo(f"analyzed {len(summary['groups'])} groups into {out_dir}")


@main.command()
@click.option("--plan", "plan_path", type=click.Path(dir_okay=False), required=True)
@click.option("--source", type=click.Path(file_okay=False), required=True,
              help="store holding recorded transcripts and traces")
@click.option("--out", "store", type=click.Path(file_okay=False), required=True)
def replay(plan_path, source, store):
    """Re-run a recorded experiment from its transcripts and verify traces."""
    try:
        plan = load_plan(plan_path)
    except PlanError as exc:
        click.echo(f"plan error: {exc}", err=True)
        sys.exit(2)
    summary = execute(plan, store, mode="replay", replay_root=source)
    if summary.failed:
        click.echo(f"{summary.failed} cells failed to replay", err=True)
        sys.exit(1)

    mismatches = []
    for cell_dir in sorted((Path(source) / "cells").iterdir()):
        trace_path = cell_dir / "trace.jsonl"
        replayed = Path(store) / "cells" / cell_dir.name / "trace.jsonl"
        if trace_path.exists() and replayed.exists():
            if trace_path.read_bytes() != replayed.read_bytes():
                mismatches.append(cell_dir.name)
    if mismatches:
        click.echo(f"trace mismatch in {len(mismatches)} cells: "
                   + ", ".join(mismatches[:5]), err=True)
        sys.exit(1)
    click.echo(f"replayed {summary.completed} cells, all traces byte-identical")


@main.command()
@click.option("--store", type=click.Path(file_okay=False), required=True)
@click.option("--out", "out_dir", type=click.Path(file_okay=False), required=True)
@click.option("--no-draw", is_flag=True, help="emit tables only, skip SVGs")
def report(store, out_dir, no_draw):
    """Emit trajectory/box/bar figure files and their data tables."""
    from .figures import render_reports

    try:
        info = render_reports(store, out_dir, draw=not no_draw)
    except BeerLabError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(1)
    click.echo(f"rendered {info['groups']} groups into {info['out']}")


if __name__ == "__main__":
    main()
