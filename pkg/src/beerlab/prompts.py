"""Prompt construction and order parsing for the chat-based agents.

The templates here are frozen contract text, checked byte-for-byte against
golden files in the test suite.  Do not reflow or "improve" the wording.
"""

from __future__ import annotations

import re

from .engine import NUM_STAGES, BeerLabError
from .policies import Observation

SYSTEM_PROMPT_ISOLATED = (
    "You have NO VISIBILITY into the inventory or backlog levels at other stages "
    "of the supply chain. You must make decisions solely based on your own local "
    "state (demand, inventory, backlog, and arriving deliveries)."
)

SYSTEM_PROMPT_SHARED = (
    "IMPORTANT NOTE: You have FULL VISIBILITY of the inventory and backlog levels "
    "across ALL stages -- retailer, wholesaler, distributor, and manufacturer. "
    "Please use this shared information to make globally optimal decisions."
)

CLOSING_INSTRUCTION = (
    "What is your action (order quantity) for this round? Your aim is to minimize "
    "the cost, where one unit of backlog costs 1.0 and one unit of inventory costs "
    "0.5. Please provide your action as a non-negative integer within brackets at "
    "the end of your response (e.g., [0])."
)

# visible history depths in the per-round state block
_STATE_ORDERS_SHOWN = 4
_STATE_DEMANDS_SHOWN = 3

_ORDER_TOKEN = re.compile(r"\[\s*(\d+)\s*\]")


class PromptError(BeerLabError):
    """Observation inconsistent with the requested prompt."""


class ParseError(BeerLabError):
    """No usable bracketed order in a completion."""


def build_system_prompt(regime: str) -> str:
    if regime == "isolated":
        return SYSTEM_PROMPT_ISOLATED
    if regime == "shared":
        return SYSTEM_PROMPT_SHARED
    raise ValueError(f"unknown regime {regime!r}")


def _recent(values, count) -> str:
    tail = values[-count:]
    if not tail:
        return "none yet"
    return ", ".join(str(v) for v in tail)


def state_description(obs: Observation) -> str:
    """Fixed-order, labeled local-state block; strictly local information."""
    lines = [
        f"- On-hand inventory: {max(obs.own_inventory, 0)} units",
        f"- Backlog: {obs.own_backlog} units",
        f"- Arriving delivery this round: {obs.arriving_now} units",
        f"- Orders placed but not yet received (supply line): {obs.supply_line} units",
        f"- Your last orders placed (most recent last): {_recent(obs.past_orders, _STATE_ORDERS_SHOWN)}",
        f"- Last incoming demands (most recent last): {_recent(obs.past_incoming_demands, _STATE_DEMANDS_SHOWN)}",
    ]
    return "\n".join(lines)


def _respectively(values) -> str:
    vals = [str(v) for v in values]
    return f"{vals[0]}, {vals[1]}, {vals[2]}, and {vals[3]}"


def build_process_prompt(obs: Observation, regime: str, round_display: int,
                         num_stages: int = NUM_STAGES) -> str:
    """Per-round decision prompt for one agent."""
    if regime != obs.regime:
        raise PromptError(f"observation regime {obs.regime!r} != requested {regime!r}")
    if regime == "shared" and obs.shared_view is None:
        raise PromptError("shared regime requires a shared view")

    parts = [
        f"Now this is round {round_display}, and you are at stage {obs.stage} "
        f"of {num_stages} in the supply chain."
    ]

    if regime == "isolated":
        parts.append(
            "You have no visibility into the inventory or backlog levels at other "
            "stages. Please make your decision solely based on your own current "
            "state and local information."
        )
    else:
        view = obs.shared_view
        parts.append(
            "IMPORTANT NOTE: You have FULL VISIBILITY of the inventory and backlog "
            "levels across ALL stages. Please thoroughly review this information "
            "before making your decision."
        )
        parts.append(
            "The inventory levels of retailer, wholesaler, distributor, and "
            f"manufacturer are {_respectively(view.inventories)} respectively."
        )
        parts.append(
            "The current backlog levels of retailer, wholesaler, distributor, and "
            f"manufacturer are: {_respectively(view.backlogs)} respectively."
        )

    if obs.stage == 1:
        parts.append(f"The demand at the retailer (stage 1) is {obs.incoming_demand}.")

    parts.append(f"Given your current state:\n{state_description(obs)}")

    if obs.stage > 1:
        parts.append(
            f"Your downstream order from stage {obs.stage - 1} for this round "
            f"is {obs.incoming_demand}."
        )

    parts.append(CLOSING_INSTRUCTION)
    return "\n\n".join(parts)


def parse_order(completion: str) -> int:
    """Extract the decision: the last bracketed non-negative integer wins."""
    matches = _ORDER_TOKEN.findall(completion)
    if not matches:
        raise ParseError("no bracketed non-negative integer in completion")
    return int(matches[-1])
