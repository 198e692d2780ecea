"""Stochastic event streams of the shock model.

Two independent renewal processes: non-lethal shocks (each element fails
with its own conditional probability) and lethal shocks (every element
fails). The next shock of a kind is drawn only when the previous one fires.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field
from typing import Sequence

from .atwood import DirectedSplit, directed_split
from .topology import Topology

CONTINUOUS = "continuous"
# CLI value "paper": delays rounded to whole hours
ROUNDED_HOURS = "paper"
ROUNDING_MODES = (CONTINUOUS, ROUNDED_HOURS)

LETHAL = "lethal"
NON_LETHAL = "non_lethal"


class ShockModelError(ValueError):
    pass


@dataclass(frozen=True)
class ShockEvent:
    time: float
    kind: str
    victims: tuple[int, ...]
    detected_online: dict[int, bool] = field(default_factory=dict)


@dataclass(frozen=True)
class OrientationConfig:
    enabled: bool = False
    subset_a: frozenset[int] = frozenset()
    p_a: float = 0.5

    def split(self, n: int, rho: float) -> DirectedSplit:
        return directed_split(n, rho, len(self.subset_a), self.p_a)

    def probabilities(self, n: int, rho: float) -> list[float]:
        """Per-element conditional failure probabilities under a non-lethal shock."""
        if not self.enabled:
            return [rho] * n
        if not self.subset_a or len(self.subset_a) >= n or not all(0 <= e < n for e in self.subset_a):
            raise ShockModelError("subset_a must be a non-empty proper subset of the elements")
        s = self.split(n, rho)
        return [s.x_a if e in self.subset_a else s.x_b for e in range(n)]


def orientation_for_subsystem(topology: Topology, subsystem: str, p_a: float) -> OrientationConfig:
    return OrientationConfig(True, frozenset(topology.subsystem_elements(subsystem)), p_a)


def _sample_time(rng: random.Random, rate: float, rounding: str) -> float:
    x = rng.expovariate(rate)
    if rounding == ROUNDED_HOURS:
        return float(math.floor(x + 0.5))
    if rounding != CONTINUOUS:
        raise ShockModelError(f"unknown rounding mode {rounding!r}")
    return x


def next_nonlethal_time(rng: random.Random, mu: float, rounding: str = CONTINUOUS) -> float:
    """Delay until the next non-lethal shock."""
    if not mu > 0.0:
        raise ShockModelError(f"non-lethal shock rate must be positive, got {mu!r}")
    return _sample_time(rng, mu, rounding)


def next_lethal_time(rng: random.Random, omega: float, rounding: str = CONTINUOUS) -> float:
    """Delay until the next lethal shock; ``inf`` when the rate is zero."""
    if omega == 0.0:
        return math.inf
    if not omega > 0.0:
        raise ShockModelError(f"lethal shock rate must be non-negative, got {omega!r}")
    return _sample_time(rng, omega, rounding)


def mark_victims(rng: random.Random, probabilities: Sequence[float]) -> list[int]:
    """Independent Bernoulli draw per element; one uniform is consumed per element."""
    victims = []
    for e, p in enumerate(probabilities):
        if not 0.0 <= p <= 1.0:
            raise ShockModelError(f"probability for element {e} outside [0, 1]: {p!r}")
        if rng.random() < p:
            victims.append(e)
    return victims


def classify_detection(rng: random.Random, coverage: float) -> bool:
    """True when the shock is detected online by autotest."""
    return rng.random() < coverage


class ShockGenerator:
    """Shock streams of one history. Owns its random stream."""

    def __init__(
        self,
        rng: random.Random,
        n_elements: int,
        mu: float,
        omega: float,
        rho: float,
        coverage: float,
        orientation: OrientationConfig | None = None,
        rounding: str = CONTINUOUS,
        per_victim_detection: bool = False,
    ):
        if rounding not in ROUNDING_MODES:
            raise ShockModelError(f"unknown rounding mode {rounding!r}")
        self.rng = rng
        self.n = n_elements
        self.mu = mu
        self.omega = omega
        self.coverage = coverage
        self.rounding = rounding
        self.per_victim_detection = per_victim_detection
        self.probabilities = (orientation or OrientationConfig()).probabilities(n_elements, rho)

    def next_nonlethal(self, now: float) -> float:
        if self.mu == 0.0:
            return math.inf
        return now + next_nonlethal_time(self.rng, self.mu, self.rounding)

    def next_lethal(self, now: float) -> float:
        return now + next_lethal_time(self.rng, self.omega, self.rounding)

    def nonlethal(self, time: float) -> ShockEvent:
        victims = mark_victims(self.rng, self.probabilities)
        if self.per_victim_detection:
            detected = {e: classify_detection(self.rng, self.coverage) for e in victims}
        else:
            hit = classify_detection(self.rng, self.coverage)
            detected = dict.fromkeys(victims, hit)
        return ShockEvent(time, NON_LETHAL, tuple(victims), detected)

    def lethal(self, time: float) -> ShockEvent:
        victims = tuple(range(self.n))
        return ShockEvent(time, LETHAL, victims, dict.fromkeys(victims, True))
