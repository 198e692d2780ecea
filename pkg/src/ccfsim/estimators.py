"""Aggregation of history results: PFD, MTTFF, failure combinations, rate estimation."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Iterable, Sequence

from .atwood import COEFFICIENT_FREE, estimate_rates_from_counts, gamma_ratio, solve_rates_analytic
from .campaign import run_campaign
from .combinations import COMBINATION_CLASSES, classify_failed_set
from .engine import (
    INDEPENDENT_FAILURE,
    LETHAL_SHOCK,
    NONLETHAL_SHOCK,
    REPAIR_DONE,
    HistoryResult,
    ModelParams,
    RexRecord,
    SimulationPolicy,
)
from .topology import Topology

Z95 = 1.96

_FAILURE_KINDS = frozenset({INDEPENDENT_FAILURE, NONLETHAL_SHOCK, LETHAL_SHOCK})


class EstimationError(ValueError):
    pass


@dataclass(frozen=True)
class Estimate:
    """Sample mean with a normal-approximation 95% interval."""

    mean: float
    stderr: float
    n: int

    @property
    def ci_low(self) -> float:
        return self.mean - Z95 * self.stderr

    @property
    def ci_high(self) -> float:
        return self.mean + Z95 * self.stderr

    @property
    def ci_width(self) -> float:
        return 2 * Z95 * self.stderr


def mean_estimate(values: Sequence[float]) -> Estimate:
    n = len(values)
    if n == 0:
        raise EstimationError("cannot estimate from an empty sample")
    mean = math.fsum(values) / n
    if n == 1:
        return Estimate(mean, 0.0, 1)
    var = math.fsum((v - mean) ** 2 for v in values) / (n - 1)
    return Estimate(mean, math.sqrt(var / n), n)


def estimate_pfd(histories: Sequence[HistoryResult]) -> tuple[Estimate, Estimate]:
    """(reference, visible) PFD: mean over histories of downtime / mission length."""
    if not histories:
        raise EstimationError("estimate_pfd needs at least one history")
    ref = mean_estimate([h.reference_downtime / h.mission_hours for h in histories])
    vis = mean_estimate([h.visible_downtime / h.mission_hours for h in histories])
    return ref, vis


def classify_combination(
    topology: Topology, event_log: Iterable[RexRecord], failure_time: float
) -> str:
    """Replay a REX log up to ``failure_time`` and classify the failed set.

    Raises EstimationError if the replayed state does not fail the system.
    """
    failed: dict[int, tuple[str, float]] = {}
    for rec in event_log:
        if rec.time > failure_time:
            break
        if rec.element is None:
            continue
        if rec.kind in _FAILURE_KINDS:
            failed[rec.element] = (rec.cause, rec.time)
        elif rec.kind == REPAIR_DONE:
            failed.pop(rec.element, None)
    down = [False] * topology.n_elements
    for e in failed:
        down[e] = True
    if not topology.system_down(down):
        raise EstimationError(f"system is not failed at t={failure_time}")
    return classify_failed_set(topology, failed)[0]


@dataclass(frozen=True)
class Mttff:
    mean_hours: float | None
    relative: float | None
    failing: int
    survivors: int


def mttff(histories: Sequence[HistoryResult], baseline: float | None = None) -> Mttff:
    """Mean first-failure time over failing histories; ``None`` when none fail.

    ``baseline`` is the mean of a reference campaign; without it the
    relative value is 1 whenever a mean exists.
    """
    times = [h.first_system_failure for h in histories if h.first_system_failure is not None]
    survivors = len(histories) - len(times)
    if not times:
        return Mttff(None, None, 0, survivors)
    mean = math.fsum(times) / len(times)
    ref = mean if baseline is None else baseline
    return Mttff(mean, mean / ref, len(times), survivors)


def combination_counts(histories: Iterable[HistoryResult]) -> dict[str, int]:
    counts = dict.fromkeys(COMBINATION_CLASSES, 0)
    for h in histories:
        if h.failure_combination is not None:
            counts[h.failure_combination] += 1
    return counts


@dataclass(frozen=True)
class ParamEstimate:
    e_i: float
    lambda_ind: float
    mu: float
    omega: float
    gamma: float
    mu_analytic: float
    omega_analytic: float
    variant: str
    histories: int

    @property
    def mu_rel_diff(self) -> float:
        return abs(self.mu - self.mu_analytic) / self.mu_analytic if self.mu_analytic else 0.0

    @property
    def omega_rel_diff(self) -> float:
        return abs(self.omega - self.omega_analytic) / self.omega_analytic if self.omega_analytic else 0.0


@dataclass
class CampaignResult:
    histories: int
    pfd_reference: Estimate
    pfd_visible: Estimate
    mttff: Mttff
    combination_counts: dict[str, int]
    estimated_params: ParamEstimate | None = None
    label: dict = field(default_factory=dict)

    @property
    def survivors(self) -> int:
        return self.mttff.survivors


def summarize(
    histories: Sequence[HistoryResult], baseline_mttff: float | None = None, label: dict | None = None
) -> CampaignResult:
    ref, vis = estimate_pfd(histories)
    return CampaignResult(
        histories=len(histories),
        pfd_reference=ref,
        pfd_visible=vis,
        mttff=mttff(histories, baseline_mttff),
        combination_counts=combination_counts(histories),
        label=dict(label or {}),
    )


def estimate_params_pipeline(
    topology: Topology,
    model: ModelParams,
    histories: int,
    seed: int,
    policy: SimulationPolicy | None = None,
    variant: str = COEFFICIENT_FREE,
    jobs: int | None = 1,
) -> ParamEstimate:
    """Estimate (lambda_ind, mu, omega) from a shock-free campaign.

    The mean number of independent failures per history gives lambda_ind;
    the shock rates follow from the alpha/beta fractions and gamma. The
    analytic solve at the same inputs is attached for comparison.
    """
    policy = replace(policy or SimulationPolicy(), shocks_enabled=False, stop_on_first_failure=False)
    results = run_campaign(topology, model, policy, histories, seed, jobs)
    e_i = math.fsum(r.independent_failures for r in results) / len(results)
    shock = model.shock
    n = topology.n_elements
    g = gamma_ratio(n, shock.alpha_nonlethal, shock.beta_lethal, shock.rho, variant)
    lam, mu, omega = estimate_rates_from_counts(
        e_i, n, policy.mission_hours, shock.alpha_nonlethal, shock.beta_lethal, g
    )
    mu_a, omega_a = solve_rates_analytic(
        n, shock.alpha_nonlethal, shock.beta_lethal, shock.rho, shock.lambda_ind, variant
    )
    return ParamEstimate(e_i, lam, mu, omega, g, mu_a, omega_a, variant, len(results))
