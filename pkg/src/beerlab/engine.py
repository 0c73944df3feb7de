"""Four-stage supply-chain state machine with delay-line shipping and ordering.

Stages are numbered 1..4 downstream to upstream: retailer, wholesaler,
distributor, manufacturer.  Backlog is encoded as negative inventory.  Cost
accounting uses exact rational arithmetic so the ledger never drifts.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Sequence

from .rng import draw_demand

NUM_STAGES = 4
DEMAND_SUPPORT = 9  # uniform integers 0..8


class BeerLabError(Exception):
    """Base class for package errors."""


class DecisionError(BeerLabError):
    """A policy produced an unusable order."""

    def __init__(self, stage: int, period: int, message: str):
        super().__init__(f"stage {stage}, period {period}: {message}")
        self.stage = stage
        self.period = period


class StructuralError(BeerLabError):
    """Delay lines out of shape; indicates corrupted state."""


@dataclass(frozen=True)
class GameConfig:
    """Environment constants for one game."""

    horizon: int = 20
    num_stages: int = NUM_STAGES
    ship_delay: int = 2
    order_delay: int = 2
    production_delay: int = 3
    holding_cost: Fraction = Fraction(1, 2)
    backlog_cost: Fraction = Fraction(1)
    initial_inventory: int = 12
    stage_capacity: int = 20
    pipeline_prefill: int = 4
    order_cap_enabled: bool = False
    # None: seeded uniform integers 0..8; otherwise every period sees this value
    demand_constant: int | None = None

    def __post_init__(self):
        if self.num_stages != NUM_STAGES:
            raise ValueError("the chain is fixed at four stages")
        if self.horizon < 1:
            raise ValueError("horizon must be >= 1")
        if min(self.ship_delay, self.order_delay, self.production_delay) < 1:
            raise ValueError("all delays must be >= 1")
        if self.holding_cost < 0 or self.backlog_cost < 0:
            raise ValueError("costs must be >= 0")
        if self.stage_capacity < 0 or self.initial_inventory < 0 or self.pipeline_prefill < 0:
            raise ValueError("capacity, initial inventory and prefill must be >= 0")
        if self.demand_constant is not None and self.demand_constant < 0:
            raise ValueError("demand_constant must be >= 0")
        # normalize costs to exact rationals regardless of caller input
        object.__setattr__(self, "holding_cost", Fraction(self.holding_cost))
        object.__setattr__(self, "backlog_cost", Fraction(self.backlog_cost))

    def with_overrides(self, **kwargs) -> "GameConfig":
        return replace(self, **kwargs)


@dataclass
class StageState:
    """Mutable per-stage ledger: stock, in-transit lines, accumulated cost."""

    inventory: int
    inbound_shipments: deque  # arrivals, one slot per ship/production period
    outbound_orders: deque  # placed orders not yet seen upstream (empty for stage 4)
    cumulative_cost: Fraction = field(default_factory=lambda: Fraction(0))

    @property
    def backlog(self) -> int:
        return max(-self.inventory, 0)

    @property
    def on_hand(self) -> int:
        return max(self.inventory, 0)

    @property
    def supply_line(self) -> int:
        return sum(self.inbound_shipments) + sum(self.outbound_orders)

    def clone(self) -> "StageState":
        return StageState(
            inventory=self.inventory,
            inbound_shipments=deque(self.inbound_shipments),
            outbound_orders=deque(self.outbound_orders),
            cumulative_cost=self.cumulative_cost,
        )


@dataclass(frozen=True)
class PeriodRecord:
    """Everything that happened in one period, all four stages."""

    period: int
    demand: int
    orders: tuple
    shipments: tuple
    arrivals: tuple
    incoming_demands: tuple
    supply_line_start: tuple  # placed-but-unreceived orders, pre-decision
    inventory_end: tuple
    period_cost: tuple  # Fractions


@dataclass(frozen=True)
class TeamTrace:
    """Complete ground-truth record of one game."""

    config: GameConfig
    seed: int
    regime: str
    periods: tuple
    total_cost_per_stage: tuple  # Fractions

    @property
    def horizon(self) -> int:
        return len(self.periods)

    def orders_for_stage(self, stage: int) -> list:
        return [rec.orders[stage - 1] for rec in self.periods]

    def inventory_path(self, stage: int) -> list:
        return [rec.inventory_end[stage - 1] for rec in self.periods]


def initial_states(config: GameConfig) -> list:
    """Fresh per-stage states with every delay slot at the configured prefill."""
    states = []
    for stage in range(1, NUM_STAGES + 1):
        inbound_len = config.production_delay if stage == NUM_STAGES else config.ship_delay
        outbound_len = 0 if stage == NUM_STAGES else config.order_delay
        states.append(
            StageState(
                inventory=config.initial_inventory,
                inbound_shipments=deque([config.pipeline_prefill] * inbound_len),
                outbound_orders=deque([config.pipeline_prefill] * outbound_len),
            )
        )
    return states


def compute_shipment(
    stage: int,
    incoming_demand: int,
    prior_inventory: int,
    arriving_units: int,
    capacity: int | None,
) -> int:
    """Units shipped downstream this period.

    min(demand, available stock after this period's arrival, capacity); the
    capacity term is skipped when capacity is None.  For stage 4 the arrival
    is the production delivery of its own past order.
    """
    if incoming_demand < 0 or arriving_units < 0:
        raise ValueError("demand and arrivals must be >= 0")
    available = max(prior_inventory + arriving_units, 0)
    shipment = min(incoming_demand, available)
    if capacity is not None:
        shipment = min(shipment, capacity)
    return shipment


def _check_lines(states: Sequence[StageState], config: GameConfig) -> None:
    for idx, st in enumerate(states):
        stage = idx + 1
        want_in = config.production_delay if stage == NUM_STAGES else config.ship_delay
        want_out = 0 if stage == NUM_STAGES else config.order_delay
        if len(st.inbound_shipments) != want_in or len(st.outbound_orders) != want_out:
            raise StructuralError(f"stage {stage}: delay line lengths {len(st.inbound_shipments)}/"
                                  f"{len(st.outbound_orders)}, expected {want_in}/{want_out}")


def advance_period(
    states: Sequence[StageState],
    orders: Sequence[int],
    demand: int,
    config: GameConfig,
    period: int,
) -> PeriodRecord:
    """Run one period in place: arrivals, shipments, inventory, cost, pushes.

    Order of effects per stage: the arrival pops from the inbound line, the
    incoming demand pops from the downstream order line (external demand for
    the retailer), the shipment is computed, inventory moves by
    arrival - incoming demand, this period's orders push onto the lines, and
    the period cost accrues.
    """
    _check_lines(states, config)
    if len(orders) != NUM_STAGES:
        raise ValueError("need exactly four orders")

    supply_line_start = tuple(st.supply_line for st in states)
    arrivals = [st.inbound_shipments.popleft() for st in states]
    incoming = [demand] + [states[i - 1].outbound_orders.popleft() for i in range(1, NUM_STAGES)]

    shipments = []
    for idx, st in enumerate(states):
        shipments.append(
            compute_shipment(idx + 1, incoming[idx], st.inventory, arrivals[idx], config.stage_capacity)
        )

    costs = []
    for idx, st in enumerate(states):
        st.inventory += arrivals[idx] - incoming[idx]
        cost = (config.holding_cost * max(st.inventory, 0)
                - config.backlog_cost * min(st.inventory, 0))
        st.cumulative_cost += cost
        costs.append(cost)

    # pushes: shipments travel downstream, orders travel upstream, the
    # manufacturer's order enters its own production line
    for idx in range(NUM_STAGES - 1):
        states[idx].inbound_shipments.append(shipments[idx + 1])
        states[idx].outbound_orders.append(orders[idx])
    states[NUM_STAGES - 1].inbound_shipments.append(orders[NUM_STAGES - 1])

    return PeriodRecord(
        period=period,
        demand=demand,
        orders=tuple(orders),
        shipments=tuple(shipments),
        arrivals=tuple(arrivals),
        incoming_demands=tuple(incoming),
        supply_line_start=supply_line_start,
        inventory_end=tuple(st.inventory for st in states),
        period_cost=tuple(costs),
    )


def run_game(config: GameConfig, policies: Sequence, seed: int, regime: str = "isolated") -> TeamTrace:
    """Play a full game and return its trace.

    ``policies`` is one decision source per stage, each exposing
    ``decide(observation) -> PolicyDecision``.  All four agents observe the
    same pre-decision snapshot (simultaneous-move semantics).
    """
    from .policies import build_observation  # local import avoids a cycle

    if len(policies) != NUM_STAGES:
        raise ValueError("need exactly four policies")
    if regime not in ("isolated", "shared"):
        raise ValueError(f"unknown regime {regime!r}")

    states = initial_states(config)
    history: list[list[dict]] = [[] for _ in range(NUM_STAGES)]
    records = []
    for t in range(1, config.horizon + 1):
        if config.demand_constant is not None:
            demand = config.demand_constant
        else:
            demand = draw_demand(seed, t, support=DEMAND_SUPPORT)
        observations = [
            build_observation(states, stage, t, demand, regime, history[stage - 1])
            for stage in range(1, NUM_STAGES + 1)
        ]
        orders = []
        for stage, (policy, obs) in enumerate(zip(policies, observations), start=1):
            decision = policy.decide(obs)
            order = decision.order
            if not isinstance(order, int) or isinstance(order, bool) or order < 0:
                raise DecisionError(stage, t, f"invalid order {order!r}")
            if config.order_cap_enabled:
                order = min(order, config.stage_capacity)
            orders.append(order)

        record = advance_period(states, orders, demand, config, t)
        records.append(record)
        for idx in range(NUM_STAGES):
            history[idx].append(
                {
                    "order": record.orders[idx],
                    "incoming_demand": record.incoming_demands[idx],
                    "arrival": record.arrivals[idx],
                    "shipment": record.shipments[idx],
                }
            )

    return TeamTrace(
        config=config,
        seed=seed,
        regime=regime,
        periods=tuple(records),
        total_cost_per_stage=tuple(st.cumulative_cost for st in states),
    )


def total_cost(trace: TeamTrace, stage: int) -> Fraction:
    """Recompute a stage's total cost from its inventory path alone."""
    h = trace.config.holding_cost
    s = trace.config.backlog_cost
    acc = Fraction(0)
    for inv in trace.inventory_path(stage):
        acc += h * max(inv, 0) - s * min(inv, 0)
    return acc
