"""Line-delimited JSON persistence for traces and transcripts.

File formats are a stable contract (see README): one header record, then one
record per period.  Serialization is canonical (sorted keys, no whitespace)
so identical runs produce identical bytes.
"""

from __future__ import annotations

import json
from fractions import Fraction
from pathlib import Path

from .engine import GameConfig, PeriodRecord, TeamTrace
from .gateway import AgentTranscript, DecisionRecord

TRACE_SCHEMA = "beerlab.trace.v1"
TRANSCRIPT_SCHEMA = "beerlab.transcript.v1"


def _dumps(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def _cost_out(value: Fraction) -> float:
    return float(value)


def _cost_in(value) -> Fraction:
    return Fraction(str(value))


def config_to_dict(config: GameConfig) -> dict:
    return {
        "horizon": config.horizon,
        "num_stages": config.num_stages,
        "ship_delay": config.ship_delay,
        "order_delay": config.order_delay,
        "production_delay": config.production_delay,
        "holding_cost": _cost_out(config.holding_cost),
        "backlog_cost": _cost_out(config.backlog_cost),
        "initial_inventory": config.initial_inventory,
        "stage_capacity": config.stage_capacity,
        "pipeline_prefill": config.pipeline_prefill,
        "order_cap_enabled": config.order_cap_enabled,
        "demand_constant": config.demand_constant,
    }


def config_from_dict(data: dict) -> GameConfig:
    return GameConfig(
        horizon=data["horizon"],
        ship_delay=data["ship_delay"],
        order_delay=data["order_delay"],
        production_delay=data["production_delay"],
        holding_cost=_cost_in(data["holding_cost"]),
        backlog_cost=_cost_in(data["backlog_cost"]),
        initial_inventory=data["initial_inventory"],
        stage_capacity=data["stage_capacity"],
        pipeline_prefill=data["pipeline_prefill"],
        order_cap_enabled=data["order_cap_enabled"],
        demand_constant=data.get("demand_constant"),
    )


def trace_to_lines(trace: TeamTrace, policy_ids=None) -> list:
    header = {
        "record_type": "header",
        "schema": TRACE_SCHEMA,
        "config": config_to_dict(trace.config),
        "seed": trace.seed,
        "regime": trace.regime,
        "policies": list(policy_ids or []),
        "total_cost_per_stage": [_cost_out(c) for c in trace.total_cost_per_stage],
    }
    lines = [_dumps(header)]
    for rec in trace.periods:
        lines.append(_dumps({
            "record_type": "period",
            "period": rec.period,
            "demand": rec.demand,
            "orders": list(rec.orders),
            "shipments": list(rec.shipments),
            "arrivals": list(rec.arrivals),
            "incoming_demands": list(rec.incoming_demands),
            "supply_line_start": list(rec.supply_line_start),
            "inventory_end": list(rec.inventory_end),
            "period_cost": [_cost_out(c) for c in rec.period_cost],
        }))
    return lines


def write_trace(path, trace: TeamTrace, policy_ids=None) -> None:
    Path(path).write_text("\n".join(trace_to_lines(trace, policy_ids)) + "\n",
                          encoding="utf-8")


def read_trace(path) -> tuple:
    """Returns (trace, header_dict)."""
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    header = json.loads(lines[0])
    if header.get("schema") != TRACE_SCHEMA:
        raise ValueError(f"{path}: unexpected trace schema {header.get('schema')!r}")
    config = config_from_dict(header["config"])
    periods = []
    for line in lines[1:]:
        data = json.loads(line)
        periods.append(PeriodRecord(
            period=data["period"],
            demand=data["demand"],
            orders=tuple(data["orders"]),
            shipments=tuple(data["shipments"]),
            arrivals=tuple(data["arrivals"]),
            incoming_demands=tuple(data["incoming_demands"]),
            supply_line_start=tuple(data["supply_line_start"]),
            inventory_end=tuple(data["inventory_end"]),
            period_cost=tuple(_cost_in(c) for c in data["period_cost"]),
        ))
    trace = TeamTrace(
        config=config,
        seed=header["seed"],
        regime=header["regime"],
        periods=tuple(periods),
        total_cost_per_stage=tuple(_cost_in(c) for c in header["total_cost_per_stage"]),
    )
    return trace, header


def write_transcripts(path, transcripts) -> None:
    """One line per (period, stage) decision, stages interleaved by period."""
    rows = []
    for transcript in transcripts:
        for rec in transcript.records:
            rows.append({
                "record_type": "decision",
                "schema": TRANSCRIPT_SCHEMA,
                "stage": transcript.stage,
                "model_id": transcript.model_id,
                "period": rec.period,
                "system_prompt_hash": rec.system_prompt_hash,
                "user_prompt": rec.user_prompt,
                "raw_completion": rec.raw_completion,
                "parsed_order": rec.parsed_order,
                "retries_used": rec.retries_used,
                "latency_s": round(rec.latency_s, 6),
            })
    rows.sort(key=lambda r: (r["period"], r["stage"]))
    Path(path).write_text("\n".join(_dumps(r) for r in rows) + "\n", encoding="utf-8")


def read_transcripts(path) -> dict:
    """Returns {stage: AgentTranscript} reconstructed from a transcript file."""
    transcripts: dict[int, AgentTranscript] = {}
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        data = json.loads(line)
        if data.get("schema") != TRANSCRIPT_SCHEMA:
            raise ValueError(f"{path}: unexpected transcript schema")
        stage = data["stage"]
        transcript = transcripts.setdefault(
            stage, AgentTranscript(stage=stage, model_id=data.get("model_id", "")))
        transcript.records.append(DecisionRecord(
            period=data["period"],
            system_prompt_hash=data["system_prompt_hash"],
            user_prompt=data["user_prompt"],
            raw_completion=data["raw_completion"],
            parsed_order=data["parsed_order"],
            retries_used=data["retries_used"],
            latency_s=data["latency_s"],
        ))
    for transcript in transcripts.values():
        transcript.records.sort(key=lambda r: r.period)
    return transcripts
