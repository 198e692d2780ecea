"""Discrete-event simulation of one mission history.

Each card element is operational, failed but undetected, or under repair.
Two element-level ledgers are kept: the reference one (every failure counts)
and the visible one (only failures that have been detected). System
downtime is integrated for both from the voting logic after every change.
"""

from __future__ import annotations

import heapq
import math
from collections import Counter, deque
from dataclasses import dataclass, field

from .atwood import DetectionParams, ShockModelParams, split_detection
from .combinations import (
    CCF_LETHAL,
    CCF_NONLETHAL,
    INDEPENDENT_NSA,
    INDEPENDENT_SA,
    NO_CAUSE,
    classify_failed_set,
)
from .rng import history_streams
from .shocks import CONTINUOUS, OrientationConfig, ShockEvent, ShockGenerator
from .topology import Topology, evaluate

OPERATIONAL = "operational"
FAILED_UNDETECTED = "failed_undetected"
UNDER_REPAIR = "under_repair"

INDEPENDENT_FAILURE = "independent_failure"
NONLETHAL_SHOCK = "nonlethal_shock"
LETHAL_SHOCK = "lethal_shock"
PERIODIC_TEST = "periodic_test"
REPAIR_DONE = "repair_done"
MISSION_END = "mission_end"

# tie-break at equal timestamps
_PRIORITY = {
    REPAIR_DONE: 0,
    PERIODIC_TEST: 1,
    INDEPENDENT_FAILURE: 2,
    NONLETHAL_SHOCK: 2,
    LETHAL_SHOCK: 2,
    MISSION_END: 3,
}

COMPETING_CLOCKS = "competing"
COVERAGE_SPLIT = "split"

HOURS_PER_MONTH = 730.0
MISSION_HOURS = 87600.0
TEST_INTERVAL_HOURS = 18 * HOURS_PER_MONTH


class EngineError(RuntimeError):
    """Internal invariant breach; the history is aborted."""


@dataclass(frozen=True)
class ElementState:
    mode: str = OPERATIONAL
    cause: str = NO_CAUSE
    failed_at: float | None = None


def fail_element(state: ElementState, cause: str, detected_online: bool, now: float) -> ElementState:
    """Transition out of the operational state.

    Hits on an element that is already failed or under repair are absorbed:
    the same state object is returned.
    """
    if state.mode != OPERATIONAL:
        return state
    return ElementState(UNDER_REPAIR if detected_online else FAILED_UNDETECTED, cause, now)


def reveal(state: ElementState) -> ElementState:
    """Periodic-test effect on one element."""
    if state.mode != FAILED_UNDETECTED:
        return state
    return ElementState(UNDER_REPAIR, state.cause, state.failed_at)


def complete_repair(state: ElementState, now: float) -> ElementState:
    if state.mode != UNDER_REPAIR:
        raise EngineError(f"repair completed at t={now} on an element in mode {state.mode!r}")
    return ElementState()


@dataclass(frozen=True)
class RepairPolicy:
    duration: float = 8.0
    distribution: str = "constant"  # or "exponential" with this mean
    crews: str = "unlimited"  # or "per_division": one crew per division, FIFO


@dataclass(frozen=True)
class ProofTestPolicy:
    interval: float = TEST_INTERVAL_HOURS
    # offset between consecutive divisions; None spreads them evenly
    stagger: float | None = None
    enabled: bool = True

    def offset(self, division: int, divisions: int) -> float:
        step = self.interval / divisions if self.stagger is None else self.stagger
        return step * division


@dataclass(frozen=True)
class SimulationPolicy:
    mission_hours: float = MISSION_HOURS
    repair: RepairPolicy = field(default_factory=RepairPolicy)
    tests: ProofTestPolicy = field(default_factory=ProofTestPolicy)
    stop_on_first_failure: bool = False
    independent_sampling: str = COMPETING_CLOCKS
    rounding: str = CONTINUOUS
    per_victim_detection: bool = False
    shocks_enabled: bool = True
    record_log: bool = False
    check_invariants: bool = False


@dataclass(frozen=True)
class ModelParams:
    shock: ShockModelParams
    coverage: float = 0.85
    orientation: OrientationConfig | None = None

    @property
    def detection(self) -> DetectionParams:
        return split_detection(self.shock.lambda_ind, self.coverage)


@dataclass(frozen=True)
class RexRecord:
    history: int
    time: float
    kind: str
    element: int | None
    element_name: str | None
    division: int | None
    apu: int | None
    subsystem: str | None
    cause: str | None
    detected_online: bool | None
    reference_down: bool
    visible_down: bool

    def to_dict(self) -> dict:
        return {
            "history": self.history,
            "time": self.time,
            "kind": self.kind,
            "element": self.element,
            "element_name": self.element_name,
            "division": self.division,
            "apu": self.apu,
            "subsystem": self.subsystem,
            "cause": self.cause,
            "detected_online": self.detected_online,
            "system_state_after": {
                "reference": "down" if self.reference_down else "up",
                "visible": "down" if self.visible_down else "up",
            },
        }


@dataclass
class HistoryResult:
    history: int
    seed: int
    mission_hours: float
    end_time: float
    reference_downtime: float
    visible_downtime: float
    reference_uptime: float
    visible_uptime: float
    reference_intervals: list[tuple[float, float]]
    visible_intervals: list[tuple[float, float]]
    first_system_failure: float | None
    failure_combination: str | None
    contributing_elements: tuple[int, ...]
    independent_failures: int
    counts: dict[str, int]
    event_log: list[RexRecord] | None = None

    @property
    def pfd_reference(self) -> float:
        return self.reference_downtime / self.mission_hours

    @property
    def pfd_visible(self) -> float:
        return self.visible_downtime / self.mission_hours


class HistorySimulator:
    """State and event loop of a single history."""

    def __init__(
        self,
        topology: Topology,
        model: ModelParams,
        policy: SimulationPolicy,
        seed: int,
        history: int = 0,
    ):
        if policy.mission_hours <= 0:
            raise ValueError(f"mission_hours must be positive, got {policy.mission_hours}")
        if policy.independent_sampling not in (COMPETING_CLOCKS, COVERAGE_SPLIT):
            raise ValueError(f"unknown independent_sampling {policy.independent_sampling!r}")
        if policy.repair.distribution not in ("constant", "exponential"):
            raise ValueError(f"unknown repair distribution {policy.repair.distribution!r}")
        if policy.repair.crews not in ("unlimited", "per_division"):
            raise ValueError(f"unknown repair crew policy {policy.repair.crews!r}")
        self.topology = topology
        self.model = model
        self.policy = policy
        self.seed = seed
        self.history = history
        self.horizon = float(policy.mission_hours)
        self.detection = model.detection

        shock_rng, self.hw = history_streams(seed)
        n = topology.n_elements
        self.shocks = ShockGenerator(
            shock_rng,
            n,
            model.shock.mu,
            model.shock.omega,
            model.shock.rho,
            model.coverage,
            orientation=model.orientation,
            rounding=policy.rounding,
            per_victim_detection=policy.per_victim_detection,
        )
        self.states = [ElementState()] * n
        self.epoch = [0] * n
        self.ref_down = [False] * n
        self.vis_down = [False] * n
        self.division_of = [e.division for e in topology.elements]
        self.queue: list = []
        self._seq = 0
        self.crew_busy = [False] * topology.divisions
        self.crew_queue = [deque() for _ in range(topology.divisions)]

        self.now = 0.0
        self.ref_sys = False
        self.vis_sys = False
        self.ref_since = 0.0
        self.vis_since = 0.0
        self.ref_intervals: list[tuple[float, float]] = []
        self.vis_intervals: list[tuple[float, float]] = []
        self.ref_up = 0.0
        self.vis_up = 0.0
        self.first_failure: float | None = None
        self.combination: str | None = None
        self.contributing: tuple[int, ...] = ()
        self.independent_failures = 0
        self.counts: Counter[str] = Counter()
        self.log: list[RexRecord] | None = [] if policy.record_log else None
        self._pending: list[tuple] = []

    # -- scheduling ----------------------------------------------------------

    def _push(self, time: float, kind: str, key: int, payload=None) -> None:
        if time > self.horizon:
            return
        self._seq += 1
        heapq.heappush(self.queue, (time, _PRIORITY[kind], key, self._seq, kind, payload))

    def _schedule_independent(self, e: int, now: float) -> None:
        det = self.detection
        if self.policy.independent_sampling == COMPETING_CLOCKS:
            t_sa = self.hw.expovariate(det.lambda_sa) if det.lambda_sa > 0 else math.inf
            t_nsa = self.hw.expovariate(det.lambda_nsa) if det.lambda_nsa > 0 else math.inf
            if t_sa <= t_nsa:
                delay, cause = t_sa, INDEPENDENT_SA
            else:
                delay, cause = t_nsa, INDEPENDENT_NSA
        else:
            lam = det.lambda_ind
            if lam <= 0:
                return
            delay = self.hw.expovariate(lam)
            cause = INDEPENDENT_SA if self.hw.random() < det.coverage else INDEPENDENT_NSA
        if delay < math.inf:
            self._push(now + delay, INDEPENDENT_FAILURE, e, (self.epoch[e], cause))

    def _repair_duration(self) -> float:
        r = self.policy.repair
        if r.duration <= 0:
            return 0.0
        if r.distribution == "exponential":
            return self.hw.expovariate(1.0 / r.duration)
        return r.duration

    def _start_repair(self, e: int, now: float) -> None:
        if self.policy.repair.crews == "per_division":
            div = self.division_of[e]
            if self.crew_busy[div]:
                self.crew_queue[div].append(e)
                return
            self.crew_busy[div] = True
        self._push(now + self._repair_duration(), REPAIR_DONE, e)

    # -- element transitions -------------------------------------------------

    def fail(self, e: int, cause: str, detected: bool, now: float) -> bool:
        old = self.states[e]
        new = fail_element(old, cause, detected, now)
        if new is old:
            return False
        self.states[e] = new
        self.epoch[e] += 1
        self.ref_down[e] = True
        if new.mode == UNDER_REPAIR:
            self.vis_down[e] = True
            self._start_repair(e, now)
        return True

    def periodic_test(self, division: int, now: float) -> list[int]:
        revealed = []
        for e in self.topology.division_elements(division):
            old = self.states[e]
            if old.mode == FAILED_UNDETECTED:
                self.states[e] = reveal(old)
                self.vis_down[e] = True
                self._start_repair(e, now)
                revealed.append(e)
        self._push(now + self.policy.tests.interval, PERIODIC_TEST, division)
        return revealed

    def complete_repair(self, e: int, now: float) -> None:
        self.states[e] = complete_repair(self.states[e], now)
        self.ref_down[e] = False
        self.vis_down[e] = False
        self.epoch[e] += 1
        self._schedule_independent(e, now)
        if self.policy.repair.crews == "per_division":
            div = self.division_of[e]
            if self.crew_queue[div]:
                nxt = self.crew_queue[div].popleft()
                self._push(now + self._repair_duration(), REPAIR_DONE, nxt)
            else:
                self.crew_busy[div] = False

    # -- bookkeeping -----------------------------------------------------------

    def _update_status(self, now: float) -> None:
        topo = self.topology
        ref = topo.system_down(self.ref_down)
        vis = topo.system_down(self.vis_down)
        if self.policy.check_invariants:
            self._check(ref, vis)
        if ref != self.ref_sys:
            if ref:
                self.ref_up += now - self.ref_since
                if self.first_failure is None:
                    self.first_failure = now
                    failed = {
                        e: (s.cause, s.failed_at)
                        for e, s in enumerate(self.states)
                        if s.mode != OPERATIONAL
                    }
                    self.combination, self.contributing = classify_failed_set(topo, failed)
            else:
                self.ref_intervals.append((self.ref_since, now))
            self.ref_sys = ref
            self.ref_since = now
        if vis != self.vis_sys:
            if vis:
                self.vis_up += now - self.vis_since
            else:
                self.vis_intervals.append((self.vis_since, now))
            self.vis_sys = vis
            self.vis_since = now

    def _check(self, ref: bool, vis: bool) -> None:
        for e in range(self.topology.n_elements):
            if self.vis_down[e] and not self.ref_down[e]:
                raise EngineError(f"element {e} visibly down but up in reference at t={self.now}")
            if self.states[e].mode == FAILED_UNDETECTED and self.states[e].cause not in (
                INDEPENDENT_NSA,
                CCF_NONLETHAL,
            ):
                raise EngineError(f"element {e} latent with cause {self.states[e].cause!r}")
        r = evaluate(self.topology, self.ref_down)
        v = evaluate(self.topology, self.vis_down)
        if r.system_down != ref or v.system_down != vis or not v.dominated_by(r):
            raise EngineError(f"visible status not dominated by reference at t={self.now}")

    def _record(self, kind: str, elements, cause=None, detected=None) -> None:
        """One REX record per element whose state changed."""
        if not elements:
            return
        self.counts[kind] += len(elements)
        if self.log is not None:
            self._pending.append((kind, tuple(elements), cause, detected))

    def _flush(self, now: float) -> None:
        topo = self.topology
        for kind, elements, cause, detected in self._pending:
            for e in elements:
                el = topo.elements[e]
                c = cause if cause is not None else self.states[e].cause
                d = detected[e] if isinstance(detected, dict) else detected
                self.log.append(
                    RexRecord(self.history, now, kind, e, el.name, el.division, el.apu,
                              el.subsystem, c, d, self.ref_sys, self.vis_sys)
                )
        self._pending.clear()

    # -- main loop ---------------------------------------------------------------

    def _apply_shock(self, ev: ShockEvent, cause: str, now: float) -> list[int]:
        return [e for e in ev.victims if self.fail(e, cause, ev.detected_online[e], now)]

    def run(self) -> HistoryResult:
        topo = self.topology
        for e in range(topo.n_elements):
            self._schedule_independent(e, 0.0)
        if self.policy.tests.enabled:
            for div in range(topo.divisions):
                self._push(self.policy.tests.offset(div, topo.divisions), PERIODIC_TEST, div)
        if self.policy.shocks_enabled:
            self._push(self.shocks.next_nonlethal(0.0), NONLETHAL_SHOCK, -1)
            self._push(self.shocks.next_lethal(0.0), LETHAL_SHOCK, -1)
        self._push(self.horizon, MISSION_END, 0)

        end = self.horizon
        while self.queue:
            now, _prio, key, _seq, kind, payload = heapq.heappop(self.queue)
            self.now = now
            if kind == MISSION_END:
                break
            changed = False
            if kind == INDEPENDENT_FAILURE:
                epoch, cause = payload
                if epoch != self.epoch[key]:
                    continue
                changed = self.fail(key, cause, cause == INDEPENDENT_SA, now)
                if changed:
                    self.independent_failures += 1
                    self._record(kind, (key,), cause, cause == INDEPENDENT_SA)
            elif kind == REPAIR_DONE:
                cause = self.states[key].cause
                self.complete_repair(key, now)
                changed = True
                self._record(kind, (key,), cause, None)
            elif kind == PERIODIC_TEST:
                revealed = self.periodic_test(key, now)
                changed = bool(revealed)
                self._record(kind, revealed, None, False)
            elif kind == NONLETHAL_SHOCK:
                ev = self.shocks.nonlethal(now)
                hit = self._apply_shock(ev, CCF_NONLETHAL, now)
                changed = bool(hit)
                self._record(kind, hit, CCF_NONLETHAL, ev.detected_online)
                self._push(self.shocks.next_nonlethal(now), NONLETHAL_SHOCK, -1)
            elif kind == LETHAL_SHOCK:
                ev = self.shocks.lethal(now)
                hit = self._apply_shock(ev, CCF_LETHAL, now)
                changed = bool(hit)
                self._record(kind, hit, CCF_LETHAL, True)
                self._push(self.shocks.next_lethal(now), LETHAL_SHOCK, -1)
            else:
                raise EngineError(f"unknown event kind {kind!r}")
            if changed:
                self._update_status(now)
            if self.log is not None:
                self._flush(now)
            if self.policy.stop_on_first_failure and self.ref_sys:
                end = now
                break

        return self._finish(end)

    def _finish(self, end: float) -> HistoryResult:
        if self.ref_sys:
            self.ref_intervals.append((self.ref_since, end))
        else:
            self.ref_up += end - self.ref_since
        if self.vis_sys:
            self.vis_intervals.append((self.vis_since, end))
        else:
            self.vis_up += end - self.vis_since
        return HistoryResult(
            history=self.history,
            seed=self.seed,
            mission_hours=self.horizon,
            end_time=end,
            reference_downtime=math.fsum(b - a for a, b in self.ref_intervals),
            visible_downtime=math.fsum(b - a for a, b in self.vis_intervals),
            reference_uptime=self.ref_up,
            visible_uptime=self.vis_up,
            reference_intervals=self.ref_intervals,
            visible_intervals=self.vis_intervals,
            first_system_failure=self.first_failure,
            failure_combination=self.combination,
            contributing_elements=self.contributing,
            independent_failures=self.independent_failures,
            counts=dict(sorted(self.counts.items())),
            event_log=self.log,
        )


def run_history(
    topology: Topology,
    model: ModelParams,
    policy: SimulationPolicy,
    seed: int,
    history: int = 0,
) -> HistoryResult:
    return HistorySimulator(topology, model, policy, seed, history).run()
