"""Factorial experiment execution with seeding, persistence, and resume.

A *cell* is one (configuration, regime, replication) game.  Cells persist as
self-contained directories, so an interrupted run resumes by skipping
whatever already completed, and every downstream statistic is recomputable
from the stored records alone.
"""

from __future__ import annotations

import fnmatch
import hashlib
import json
import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import yaml

from .engine import BeerLabError, GameConfig, TeamTrace, run_game
from .gateway import AgentFailureError, HttpChatClient, LLMPolicy, ModelProfile, StubChatClient
from .policies import (
    ConstantPolicy,
    MatchDemandPolicy,
    PanicPolicy,
    ReplayPolicy,
    tracking_demand_team,
)
from .rng import derive_cell_seed, derive_demand_seed
from .serialize import (
    config_from_dict,
    config_to_dict,
    read_trace,
    read_transcripts,
    write_trace,
    write_transcripts,
)

CONFIGURATIONS = ("Original", "R-Overall", "R-S1", "R-S2", "R-S3", "R-S4")
REGIMES = ("isolated", "shared")
TIERS = ("shallow", "deep")
POLICY_KINDS = ("llm", "tracking", "constant", "match_demand", "panic")
MANIFEST_NAME = "manifest.json"
CELLS_DIR = "cells"


class PlanError(BeerLabError):
    """Experiment plan failed schema validation."""


def tier_assignment(configuration: str) -> tuple:
    """Per-stage cognitive tier implied by a configuration name."""
    if configuration == "Original":
        return ("shallow",) * 4
    if configuration == "R-Overall":
        return ("deep",) * 4
    if configuration in CONFIGURATIONS and configuration.startswith("R-S"):
        deep_stage = int(configuration[3:])
        return tuple("deep" if s == deep_stage else "shallow" for s in range(1, 5))
    raise PlanError(f"unknown configuration {configuration!r}")


@dataclass(frozen=True)
class PolicySpec:
    kind: str = "llm"
    params: dict = field(default_factory=dict)


@dataclass(frozen=True)
class ExperimentPlan:
    master_seed: int
    replications: int
    configurations: tuple
    regimes: tuple
    game: GameConfig
    policy: PolicySpec
    profiles: dict  # tier -> ModelProfile
    raw: dict = field(default_factory=dict, compare=False)

    def cells(self):
        for configuration in self.configurations:
            for regime in self.regimes:
                for rep in range(self.replications):
                    yield configuration, regime, rep


def _require(condition: bool, message: str) -> None:
    if not condition:
        raise PlanError(message)


def plan_from_dict(data: dict) -> ExperimentPlan:
    _require(isinstance(data, dict), "plan must be a mapping")
    _require("master_seed" in data, "plan.master_seed is required")
    master_seed = data["master_seed"]
    _require(isinstance(master_seed, int), "plan.master_seed must be an integer")

    replications = data.get("replications", 32)
    _require(isinstance(replications, int) and replications >= 1,
             "plan.replications must be a positive integer")

    configurations = tuple(data.get("configurations", CONFIGURATIONS))
    for name in configurations:
        _require(name in CONFIGURATIONS,
                 f"plan.configurations: unknown name {name!r} "
                 f"(expected one of {', '.join(CONFIGURATIONS)})")
    regimes = tuple(data.get("regimes", REGIMES))
    for regime in regimes:
        _require(regime in REGIMES, f"plan.regimes: unknown regime {regime!r}")

    game_overrides = data.get("game", {})
    _require(isinstance(game_overrides, dict), "plan.game must be a mapping")
    try:
        game = config_from_dict({**config_to_dict(GameConfig()), **game_overrides})
    except (TypeError, ValueError, KeyError) as exc:
        raise PlanError(f"plan.game: {exc}") from exc

    policy_data = data.get("policy", {"kind": "llm"})
    _require(isinstance(policy_data, dict), "plan.policy must be a mapping")
    kind = policy_data.get("kind", "llm")
    _require(kind in POLICY_KINDS,
             f"plan.policy.kind: unknown kind {kind!r} (expected one of {', '.join(POLICY_KINDS)})")
    policy = PolicySpec(kind=kind, params=dict(policy_data.get("params", {})))

    profiles = {}
    for tier, profile_data in (data.get("profiles") or {}).items():
        _require(tier in TIERS, f"plan.profiles: unknown tier {tier!r}")
        _require(isinstance(profile_data, dict), f"plan.profiles.{tier} must be a mapping")
        try:
            profiles[tier] = ModelProfile(tier=tier, **profile_data)
        except (TypeError, ValueError) as exc:
            raise PlanError(f"plan.profiles.{tier}: {exc}") from exc
    if kind == "llm":
        for tier in TIERS:
            _require(tier in profiles, f"plan.profiles.{tier} is required for llm policy plans")

    return ExperimentPlan(
        master_seed=master_seed,
        replications=replications,
        configurations=configurations,
        regimes=regimes,
        game=game,
        policy=policy,
        profiles=profiles,
        raw=data,
    )


def load_plan(path) -> ExperimentPlan:
    try:
        data = yaml.safe_load(Path(path).read_text(encoding="utf-8"))
    except yaml.YAMLError as exc:
        raise PlanError(f"{path}: not valid YAML/JSON: {exc}") from exc
    plan = plan_from_dict(data)
    return plan


def plan_hash(plan: ExperimentPlan) -> str:
    canonical = json.dumps(plan.raw, sort_keys=True, separators=(",", ":"), default=str)
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()[:16]


def cell_id(configuration: str, regime: str, replication: int) -> str:
    return f"{configuration}__{regime}__rep{replication:03d}"


@dataclass
class CellResult:
    configuration: str
    regime: str
    replication: int
    seed: int
    status: str  # "complete" | "failed" | "skipped"
    reason: str = ""


@dataclass
class ExecutionSummary:
    attempted: int = 0
    completed: int = 0
    skipped: int = 0
    failed: int = 0
    results: list = field(default_factory=list)

    @property
    def all_complete(self) -> bool:
        return self.failed == 0


def _scripted_policies(plan: ExperimentPlan):
    kind, params = plan.policy.kind, plan.policy.params
    if kind == "tracking":
        return tracking_demand_team(plan.game, max_lead=params.get("max_lead", 3))
    if kind == "constant":
        return [ConstantPolicy(params.get("quantity", 4)) for _ in range(4)]
    if kind == "match_demand":
        return [MatchDemandPolicy() for _ in range(4)]
    if kind == "panic":
        return [PanicPolicy(alpha=params.get("alpha", 1.0),
                            beta=params.get("beta", 0.2),
                            target=params.get("target", plan.game.initial_inventory))
                for _ in range(4)]
    raise PlanError(f"not a scripted policy kind: {kind!r}")


def _policy_ids(plan: ExperimentPlan, configuration: str):
    if plan.policy.kind != "llm":
        return [plan.policy.kind] * 4
    return [plan.profiles[tier].model_id for tier in tier_assignment(configuration)]


def _match_filter(configuration: str, regime: str, replication: int, cell_filter: str) -> bool:
    if not cell_filter:
        return True
    parts = (cell_filter.split("/") + ["*", "*"])[:3]
    return (fnmatch.fnmatch(configuration, parts[0])
            and fnmatch.fnmatch(regime, parts[1])
            and fnmatch.fnmatch(str(replication), parts[2]))


def run_cell(plan: ExperimentPlan, configuration: str, regime: str, replication: int,
             store: Path, mode: str, replay_root: Path | None = None) -> CellResult:
    """Execute and persist a single cell; idempotent when already complete."""
    demand_seed = derive_demand_seed(plan.master_seed, replication)
    cell_dir = store / CELLS_DIR / cell_id(configuration, regime, replication)
    status_path = cell_dir / "status.json"
    trace_path = cell_dir / "trace.jsonl"

    if status_path.exists():
        status = json.loads(status_path.read_text(encoding="utf-8"))
        if status.get("status") == "complete" and trace_path.exists():
            return CellResult(configuration, regime, replication, demand_seed, "skipped")

    cell_dir.mkdir(parents=True, exist_ok=True)
    transcripts = None
    try:
        if plan.policy.kind != "llm":
            policies = _scripted_policies(plan)
        elif mode == "replay":
            source = (replay_root or store) / CELLS_DIR / cell_id(configuration, regime, replication)
            recorded = read_transcripts(source / "transcripts.jsonl")
            policies = [ReplayPolicy(recorded[stage].orders_by_period())
                        for stage in range(1, 5)]
        else:
            if mode == "stub":
                client = StubChatClient()
                policies = [
                    LLMPolicy(plan.profiles[tier], regime, client,
                              sleep=lambda s: None, clock=lambda: 0.0)
                    for tier in tier_assignment(configuration)
                ]
            elif mode == "live":
                client = HttpChatClient()
                policies = [LLMPolicy(plan.profiles[tier], regime, client)
                            for tier in tier_assignment(configuration)]
            else:
                raise PlanError(f"unknown mode {mode!r}")
            transcripts = [p.transcript for p in policies]

        trace = run_game(plan.game, policies, demand_seed, regime=regime)
    except (AgentFailureError, BeerLabError, OSError) as exc:
        status_path.write_text(json.dumps({"status": "failed", "reason": str(exc)},
                                          sort_keys=True), encoding="utf-8")
        return CellResult(configuration, regime, replication, demand_seed, "failed", str(exc))

    write_trace(trace_path, trace, policy_ids=_policy_ids(plan, configuration))
    if transcripts is not None:
        write_transcripts(cell_dir / "transcripts.jsonl", transcripts)
    status_path.write_text(json.dumps({"status": "complete"}, sort_keys=True), encoding="utf-8")
    return CellResult(configuration, regime, replication, demand_seed, "complete")


def execute(plan: ExperimentPlan, store, mode: str = "stub", parallelism: int = 1,
            cell_filter: str = "", replay_root=None,
            progress=None) -> ExecutionSummary:
    """Run every planned cell, resuming past completed ones.

    Cells are independent; they may run in any order or concurrently and the
    persisted set is the same.
    """
    store = Path(store)
    store.mkdir(parents=True, exist_ok=True)
    manifest_path = store / MANIFEST_NAME
    manifest = {"schema": "beerlab.manifest.v1", "plan": plan.raw, "plan_hash": plan_hash(plan)}
    if manifest_path.exists():
        existing = json.loads(manifest_path.read_text(encoding="utf-8"))
        if existing.get("plan_hash") != manifest["plan_hash"]:
            raise BeerLabError(f"{manifest_path}: store was created from a different plan")
    else:
        manifest_path.write_text(json.dumps(manifest, sort_keys=True, indent=2),
                                 encoding="utf-8")

    cells = [c for c in plan.cells() if _match_filter(*c, cell_filter)]
    summary = ExecutionSummary()
    lock = threading.Lock()

    def _one(cell):
        result = run_cell(plan, *cell, store=store, mode=mode,
                          replay_root=Path(replay_root) if replay_root else None)
        with lock:
            summary.attempted += 1
            summary.results.append(result)
            if result.status == "complete":
                summary.completed += 1
            elif result.status == "skipped":
                summary.skipped += 1
            else:
                summary.failed += 1
            if progress is not None:
                progress(result)
        return result

    if parallelism <= 1:
        for cell in cells:
            _one(cell)
    else:
        with ThreadPoolExecutor(max_workers=parallelism) as pool:
            list(pool.map(_one, cells))

    summary.results.sort(key=lambda r: (r.configuration, r.regime, r.replication))
    return summary


def load_completed_cells(store) -> list:
    """All complete cells in a store: [(configuration, regime, replication, trace, header)]."""
    store = Path(store)
    out = []
    cells_root = store / CELLS_DIR
    if not cells_root.is_dir():
        return out
    for cell_dir in sorted(cells_root.iterdir()):
        status_path = cell_dir / "status.json"
        trace_path = cell_dir / "trace.jsonl"
        if not (status_path.exists() and trace_path.exists()):
            continue
        if json.loads(status_path.read_text(encoding="utf-8")).get("status") != "complete":
            continue
        configuration, regime, rep_part = cell_dir.name.rsplit("__", 2)
        trace, header = read_trace(trace_path)
        out.append((configuration, regime, int(rep_part[3:]), trace, header))
    return out
