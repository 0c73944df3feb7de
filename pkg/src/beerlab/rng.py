"""Portable deterministic random numbers and seed derivation.

The demand stream must reproduce bit-for-bit across platforms and across
process restarts, so nothing here depends on interpreter hash seeds or on
library-version-specific generator internals.  The core primitive is the
SplitMix64 finalizer, a well-studied 64-bit mixing function.
"""

from __future__ import annotations

import hashlib

_MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15


def mix64(x: int) -> int:
    """SplitMix64 finalizer: bijective avalanche mix of a 64-bit word."""
    x &= _MASK64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & _MASK64
    return (x ^ (x >> 31)) & _MASK64


def draw_demand(seed: int, period: int, *, support: int = 9) -> int:
    """Retail demand for one period: uniform integer in [0, support).

    Pure function of (seed, period).  Uses rejection sampling so every value
    in the support is exactly equally likely.
    """
    if period < 1:
        raise ValueError(f"period must be >= 1, got {period}")
    threshold = _MASK64 + 1 - ((_MASK64 + 1) % support)
    stream = mix64(seed ^ mix64(period * _GOLDEN))
    attempt = 0
    while stream >= threshold:
        attempt += 1
        stream = mix64(stream + attempt * _GOLDEN)
    return stream % support


def _digest64(*parts: object) -> int:
    payload = "\x1f".join(str(p) for p in parts).encode("utf-8")
    return int.from_bytes(hashlib.sha256(payload).digest()[:8], "big")


def derive_demand_seed(master_seed: int, replication: int) -> int:
    """Seed for the demand path of one replication.

    Deliberately independent of configuration and information regime so the
    same replication index faces the same demand stream in every cell
    (paired comparisons across experimental conditions).
    """
    if replication < 0:
        raise ValueError("replication must be >= 0")
    return _digest64("demand", master_seed, replication)


def derive_cell_seed(master_seed: int, configuration: str, regime: str, replication: int) -> int:
    """Collision-resistant per-cell seed covering all four coordinates."""
    if replication < 0:
        raise ValueError("replication must be >= 0")
    return _digest64("cell", master_seed, configuration, regime, replication)
