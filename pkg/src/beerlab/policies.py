"""Ordering policies and the observation protocol they share.

Every policy is a pure function of its Observation plus its own fixed
parameters, so identical observations always produce identical decisions.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence

from .engine import NUM_STAGES, BeerLabError, GameConfig, StageState


class ReplayGapError(BeerLabError):
    """A replay policy was asked for a period it has no record of."""


@dataclass(frozen=True)
class SharedView:
    """What every agent sees under the information-sharing regime."""

    inventories: tuple  # on-hand, retailer -> manufacturer
    backlogs: tuple


@dataclass(frozen=True)
class Observation:
    """Pre-decision snapshot of exactly what one agent may see."""

    period: int
    stage: int
    regime: str
    own_inventory: int  # signed, end of previous period
    own_backlog: int
    arriving_now: int
    incoming_demand: int
    supply_line: int  # all placed-but-unreceived orders
    in_transit: int  # inbound pipeline only (arrives within the lead time)
    past_orders: tuple
    past_incoming_demands: tuple
    past_arrivals: tuple
    past_shipments: tuple
    shared_view: Optional[SharedView] = None


@dataclass(frozen=True)
class PolicyDecision:
    order: int
    rationale: Optional[str] = None


def build_observation(
    states: Sequence[StageState],
    stage: int,
    period: int,
    demand: int,
    regime: str,
    history: Sequence[dict],
) -> Observation:
    """Assemble one stage's observation from the pre-decision state."""
    st = states[stage - 1]
    if stage == 1:
        incoming = demand
    else:
        incoming = states[stage - 2].outbound_orders[0]
    shared = None
    if regime == "shared":
        shared = SharedView(
            inventories=tuple(s.on_hand for s in states),
            backlogs=tuple(s.backlog for s in states),
        )
    return Observation(
        period=period,
        stage=stage,
        regime=regime,
        own_inventory=st.inventory,
        own_backlog=st.backlog,
        arriving_now=st.inbound_shipments[0],
        incoming_demand=incoming,
        supply_line=st.supply_line,
        in_transit=sum(st.inbound_shipments),
        past_orders=tuple(h["order"] for h in history),
        past_incoming_demands=tuple(h["incoming_demand"] for h in history),
        past_arrivals=tuple(h["arrival"] for h in history),
        past_shipments=tuple(h["shipment"] for h in history),
        shared_view=shared,
    )


def _round_half_up(q: Fraction) -> int:
    # round half away from zero; all callers clamp to >= 0 first
    return int(q + Fraction(1, 2))


class TrackingDemandPolicy:
    """Moving-average target-inventory heuristic.

    Orders the gap between a demand-tracking target and the current
    inventory position, clamped to the stage capacity.  The downstream
    backlog term is only observable under the shared regime; in isolation it
    is taken as zero.
    """

    def __init__(self, lead_time: int, max_lead: int = 3, capacity: int = 20,
                 cold_start_shipment: int = 4):
        self.lead_time = lead_time
        self.max_lead = max_lead
        self.capacity = capacity
        self.cold_start_shipment = cold_start_shipment

    def decide(self, obs: Observation) -> PolicyDecision:
        window = obs.past_shipments[-self.max_lead:]
        if window:
            avg_shipped = Fraction(sum(window), len(window))
        else:
            avg_shipped = Fraction(self.cold_start_shipment)

        target = avg_shipped * self.lead_time + obs.own_backlog
        downstream_backlog = 0
        if obs.shared_view is not None and obs.stage > 1:
            downstream_backlog = obs.shared_view.backlogs[obs.stage - 2]
        # subtract the whole outstanding supply line, not just the inbound
        # leg: only then does the rule weight pipeline stock like on-hand
        # stock, which is what makes it a non-myopic baseline
        unconstrained = (target - max(obs.own_inventory, 0)
                         - downstream_backlog - obs.supply_line)

        clamped = min(max(Fraction(0), unconstrained), Fraction(self.capacity))
        order = _round_half_up(clamped)
        return PolicyDecision(
            order=order,
            rationale=(f"avg_shipped={float(avg_shipped):.3f} target={float(target):.3f} "
                       f"unconstrained={float(unconstrained):.3f}"),
        )


def tracking_demand_team(config: GameConfig, max_lead: int = 3) -> list:
    """One tracking-demand policy per stage with its actual lead time."""
    team = []
    for stage in range(1, NUM_STAGES + 1):
        lead = config.production_delay if stage == NUM_STAGES else config.ship_delay
        team.append(TrackingDemandPolicy(lead_time=lead, max_lead=max_lead,
                                         capacity=config.stage_capacity,
                                         cold_start_shipment=config.pipeline_prefill))
    return team


class ConstantPolicy:
    """Always order the same quantity."""

    def __init__(self, quantity: int):
        if quantity < 0:
            raise ValueError("quantity must be >= 0")
        self.quantity = quantity

    def decide(self, obs: Observation) -> PolicyDecision:
        return PolicyDecision(order=self.quantity)


class MatchDemandPolicy:
    """Pass the incoming demand straight through."""

    def decide(self, obs: Observation) -> PolicyDecision:
        return PolicyDecision(order=obs.incoming_demand)


class PanicPolicy:
    """Overreacting rule that underweights the supply line.

    Orders incoming demand plus alpha times the stock shortfall against a
    fixed target, minus beta times the supply line.  With beta < alpha the
    supply line is systematically discounted, which induces both a bullwhip
    and the myopia signature the analysis suite must detect.
    """

    def __init__(self, alpha: float, beta: float, target: int = 12):
        if alpha < 0 or beta < 0:
            raise ValueError("alpha and beta must be >= 0")
        self.alpha = Fraction(str(alpha))
        self.beta = Fraction(str(beta))
        self.target = target

    def decide(self, obs: Observation) -> PolicyDecision:
        shortfall = max(self.target - obs.own_inventory, 0)
        raw = (obs.incoming_demand + self.alpha * shortfall
               - self.beta * obs.supply_line)
        order = _round_half_up(max(Fraction(0), raw))
        return PolicyDecision(order=order)


class ReplayPolicy:
    """Replays recorded orders; never computes and never touches a network."""

    def __init__(self, orders_by_period: dict):
        self.orders_by_period = dict(orders_by_period)

    def decide(self, obs: Observation) -> PolicyDecision:
        try:
            order = self.orders_by_period[obs.period]
        except KeyError:
            raise ReplayGapError(f"no recorded order for period {obs.period}") from None
        return PolicyDecision(order=order)
