"""Chat-completion transport, retry handling, and transcript recording.

Live traffic goes through :class:`HttpChatClient` against any endpoint that
speaks the common chat-completions shape.  Tests and desk-scale experiments
use :class:`StubChatClient`, which is deterministic and never touches the
network.  Everything an agent says and hears lands in an
:class:`AgentTranscript` so runs can be audited and replayed byte-exactly.
"""

from __future__ import annotations

import hashlib
import os
import time
from dataclasses import dataclass, field
from typing import Callable, Optional

from .engine import NUM_STAGES, BeerLabError
from .policies import Observation, PolicyDecision
from .prompts import ParseError, build_process_prompt, build_system_prompt, parse_order
from .rng import mix64

FORMAT_REMINDER = (
    "Reminder: end your response with your order as a non-negative integer "
    "within brackets, e.g., [4]."
)

DEFAULT_API_KEY_ENV = "BEERLAB_API_KEY"


class AgentFailureError(BeerLabError):
    """All attempts for one decision failed; the run must not fabricate an order."""

    def __init__(self, stage: int, period: int, message: str):
        super().__init__(f"stage {stage}, period {period}: {message}")
        self.stage = stage
        self.period = period


@dataclass(frozen=True)
class ModelProfile:
    """Deployment-agnostic description of one chat model."""

    tier: str  # "shallow" | "deep"
    family: str  # "A" | "B"
    model_id: str
    endpoint: str = ""
    temperature: float = 1.0
    max_retries: int = 2
    timeout_s: float = 60.0
    api_key_env: str = DEFAULT_API_KEY_ENV

    def __post_init__(self):
        if self.tier not in ("shallow", "deep"):
            raise ValueError(f"unknown tier {self.tier!r}")
        if self.max_retries < 0:
            raise ValueError("max_retries must be >= 0")


@dataclass
class DecisionRecord:
    period: int
    system_prompt_hash: str
    user_prompt: str
    raw_completion: str
    parsed_order: int
    retries_used: int
    latency_s: float


@dataclass
class AgentTranscript:
    """One stage's full prompt/completion history for a game."""

    stage: int
    model_id: str = ""
    records: list = field(default_factory=list)

    def orders_by_period(self) -> dict:
        return {rec.period: rec.parsed_order for rec in self.records}


def prompt_hash(text: str) -> str:
    return hashlib.sha256(text.encode("utf-8")).hexdigest()[:16]


class StubChatClient:
    """Deterministic offline stand-in for a chat endpoint.

    The reply depends only on (model_id, user prompt), so a rerun of the same
    plan reproduces every completion byte for byte.  Orders land in the same
    0..8 range as demand.
    """

    def __init__(self, order_span: int = 9):
        self.order_span = order_span
        self.calls = 0

    def complete(self, profile: ModelProfile, system: str, user: str) -> str:
        self.calls += 1
        digest = hashlib.sha256(f"{profile.model_id}\x1f{user}".encode("utf-8")).digest()
        order = mix64(int.from_bytes(digest[:8], "big")) % self.order_span
        return (f"Given my current state I will keep my pipeline moving and "
                f"place a moderate order. [{order}]")


class ScriptedChatClient:
    """Replays a fixed sequence of completions; for transport tests."""

    def __init__(self, completions):
        self.completions = list(completions)
        self.calls = 0

    def complete(self, profile: ModelProfile, system: str, user: str) -> str:
        if self.calls >= len(self.completions):
            raise RuntimeError("scripted client exhausted")
        text = self.completions[self.calls]
        self.calls += 1
        return text


class HttpChatClient:
    """Minimal client for chat-completions HTTP endpoints.

    Sends ``{model, temperature, messages:[{system},{user}]}`` to
    ``<endpoint>/chat/completions`` with a bearer token from the profile's
    configured environment variable.
    """

    def complete(self, profile: ModelProfile, system: str, user: str) -> str:
        import requests

        if not profile.endpoint:
            raise BeerLabError(f"profile {profile.model_id} has no endpoint configured")
        headers = {"Content-Type": "application/json"}
        api_key = os.environ.get(profile.api_key_env, "")
        if api_key:
            headers["Authorization"] = f"Bearer {api_key}"
        payload = {
            "model": profile.model_id,
            "temperature": profile.temperature,
            "messages": [
                {"role": "system", "content": system},
                {"role": "user", "content": user},
            ],
        }
        url = profile.endpoint.rstrip("/") + "/chat/completions"
        resp = requests.post(url, json=payload, headers=headers, timeout=profile.timeout_s)
        resp.raise_for_status()
        return resp.json()["choices"][0]["message"]["content"]


def request_decision(
    profile: ModelProfile,
    system: str,
    user: str,
    client,
    stage: int,
    period: int,
    sleep: Callable[[float], None] = time.sleep,
    backoff_s: float = 0.5,
) -> tuple:
    """One decision with retry-on-failure; returns (raw, order, retries_used).

    Parse failures get a terse format reminder appended to the next attempt;
    transport failures retry the prompt unchanged.  Exhaustion raises
    :class:`AgentFailureError` rather than inventing an order.
    """
    attempts = profile.max_retries + 1
    prompt = user
    last_error: Exception | None = None
    for attempt in range(attempts):
        if attempt > 0:
            sleep(backoff_s * (2 ** (attempt - 1)))
        try:
            raw = client.complete(profile, system, prompt)
        except BeerLabError:
            raise
        except Exception as exc:  # transport failure: retry unchanged
            last_error = exc
            continue
        try:
            order = parse_order(raw)
        except ParseError as exc:
            last_error = exc
            prompt = f"{user}\n\n{FORMAT_REMINDER}"
            continue
        return raw, order, attempt
    raise AgentFailureError(stage, period, f"retries exhausted: {last_error}")


class LLMPolicy:
    """Policy adapter: renders prompts, queries the model, records everything."""

    def __init__(self, profile: ModelProfile, regime: str, client,
                 sleep: Callable[[float], None] = time.sleep,
                 clock: Callable[[], float] = time.monotonic):
        self.profile = profile
        self.regime = regime
        self.client = client
        self.sleep = sleep
        self.clock = clock
        self.system_prompt = build_system_prompt(regime)
        self.transcript = AgentTranscript(stage=0, model_id=profile.model_id)

    def decide(self, obs: Observation) -> PolicyDecision:
        self.transcript.stage = obs.stage
        user = build_process_prompt(obs, self.regime, round_display=obs.period,
                                    num_stages=NUM_STAGES)
        started = self.clock()
        raw, order, retries = request_decision(
            self.profile, self.system_prompt, user, self.client,
            stage=obs.stage, period=obs.period, sleep=self.sleep,
        )
        self.transcript.records.append(
            DecisionRecord(
                period=obs.period,
                system_prompt_hash=prompt_hash(self.system_prompt),
                user_prompt=user,
                raw_completion=raw,
                parsed_order=order,
                retries_used=retries,
                latency_s=self.clock() - started,
            )
        )
        return PolicyDecision(order=order, rationale=raw)
