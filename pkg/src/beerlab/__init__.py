"""Deterministic, replayable Beer Distribution Game laboratory."""

from .engine import (
    BeerLabError,
    DecisionError,
    GameConfig,
    PeriodRecord,
    StageState,
    StructuralError,
    TeamTrace,
    advance_period,
    compute_shipment,
    initial_states,
    run_game,
    total_cost,
)
from .policies import (
    ConstantPolicy,
    MatchDemandPolicy,
    Observation,
    PanicPolicy,
    PolicyDecision,
    ReplayPolicy,
    TrackingDemandPolicy,
    tracking_demand_team,
)
from .rng import derive_cell_seed, derive_demand_seed, draw_demand

__all__ = [
    "BeerLabError",
    "ConstantPolicy",
    "DecisionError",
    "GameConfig",
    "MatchDemandPolicy",
    "Observation",
    "PanicPolicy",
    "PeriodRecord",
    "PolicyDecision",
    "ReplayPolicy",
    "StageState",
    "StructuralError",
    "TeamTrace",
    "TrackingDemandPolicy",
    "advance_period",
    "compute_shipment",
    "derive_cell_seed",
    "derive_demand_seed",
    "draw_demand",
    "initial_states",
    "run_game",
    "total_cost",
    "tracking_demand_team",
]

__version__ = "0.1.0"
