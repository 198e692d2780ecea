"""Deterministic per-history random streams."""

from __future__ import annotations

import random

_MASK64 = (1 << 64) - 1


def splitmix64(x: int) -> int:
    x = (x + 0x9E3779B97F4A7C15) & _MASK64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & _MASK64
    return x ^ (x >> 31)


def history_seed(master_seed: int, history: int) -> int:
    """``master_seed XOR splitmix64(history)``, reduced to 64 bits."""
    return (master_seed & _MASK64) ^ splitmix64(history)


def history_streams(seed: int) -> tuple[random.Random, random.Random]:
    """Return the (shock, hardware) streams of one history.

    Shocks and hardware draw from separate streams so that changing the shock
    model leaves independent failure times untouched for the same seed.
    """
    return random.Random(seed), random.Random(splitmix64(seed ^ 0x5A5A5A5A5A5A5A5A))
