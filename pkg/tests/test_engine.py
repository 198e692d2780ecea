import math
from dataclasses import replace

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ccfsim.atwood import ShockModelParams
from ccfsim.combinations import CCF_LETHAL, INDEPENDENT_NSA, INDEPENDENT_SA
from ccfsim.engine import (
    FAILED_UNDETECTED,
    OPERATIONAL,
    PERIODIC_TEST,
    REPAIR_DONE,
    UNDER_REPAIR,
    ElementState,
    EngineError,
    HistorySimulator,
    ModelParams,
    RepairPolicy,
    SimulationPolicy,
    ProofTestPolicy,
    complete_repair,
    fail_element,
    reveal,
    run_history,
)
from ccfsim.rng import history_seed
from ccfsim.topology import ArchitectureConfig, build_topology

PLANT = build_topology()
DEFAULT_SHOCK = ShockModelParams(mu=9.47e-7, omega=1.18e-8, rho=0.2, lambda_ind=2.35e-6)


def model(mu=0.0, omega=0.0, rho=0.2, lam=0.0, coverage=0.85):
    return ModelParams(ShockModelParams(mu=mu, omega=omega, rho=rho, lambda_ind=lam), coverage)


def single_element():
    return build_topology(
        ArchitectureConfig(divisions=1, apus_per_division=1, subsystems={"S": (0,)}, cards=("C1",))
    )


class TestTransitions:
    def test_sa_goes_to_repair(self):
        s = fail_element(ElementState(), INDEPENDENT_SA, True, 5.0)
        assert s == ElementState(UNDER_REPAIR, INDEPENDENT_SA, 5.0)

    def test_nsa_stays_hidden(self):
        s = fail_element(ElementState(), INDEPENDENT_NSA, False, 5.0)
        assert s.mode == FAILED_UNDETECTED

    def test_shock_on_failed_element_absorbed(self):
        s = ElementState(FAILED_UNDETECTED, INDEPENDENT_NSA, 1.0)
        assert fail_element(s, CCF_LETHAL, True, 2.0) is s

    def test_reveal_and_repair(self):
        s = reveal(ElementState(FAILED_UNDETECTED, INDEPENDENT_NSA, 1.0))
        assert s.mode == UNDER_REPAIR and s.failed_at == 1.0
        assert complete_repair(s, 9.0) == ElementState()
        assert reveal(ElementState()).mode == OPERATIONAL

    def test_repair_of_operational_is_error(self):
        with pytest.raises(EngineError):
            complete_repair(ElementState(), 0.0)


class TestTrivialRuns:
    def test_all_rates_zero(self):
        res = run_history(PLANT, model(), SimulationPolicy(record_log=True), 1)
        assert res.reference_downtime == 0.0 and res.visible_downtime == 0.0
        assert res.event_log == []
        assert res.first_system_failure is None

    def test_lethal_storm_reference_equals_visible(self):
        res = run_history(PLANT, model(omega=1.0), SimulationPolicy(mission_hours=2000.0), 3)
        assert res.reference_downtime > 0
        assert res.reference_downtime == res.visible_downtime

    def test_repair_zero_gives_zero_downtime(self):
        policy = SimulationPolicy(mission_hours=1000.0, repair=RepairPolicy(duration=0.0))
        res = run_history(single_element(), model(lam=0.05, coverage=1.0), policy, 4)
        assert res.independent_failures > 10
        assert res.reference_downtime == 0.0

    def test_default_repair_takes_eight_hours(self):
        policy = SimulationPolicy(mission_hours=5000.0, tests=ProofTestPolicy(enabled=False))
        res = run_history(single_element(), model(lam=1e-2, coverage=1.0), policy, 5)
        inner = [b - a for a, b in res.reference_intervals if b < res.end_time]
        assert inner and all(d == pytest.approx(8.0, abs=1e-9) for d in inner)
        assert res.visible_intervals == res.reference_intervals

    def test_concurrent_repairs_complete_together(self):
        policy = SimulationPolicy(mission_hours=3000.0, record_log=True)
        res = run_history(PLANT, model(omega=1e-3), policy, 6)
        lethal = [r for r in res.event_log if r.kind == "lethal_shock"]
        assert lethal
        t0 = lethal[0].time
        repairs = [r for r in res.event_log if r.kind == REPAIR_DONE and r.time < t0 + 10]
        assert len(repairs) == 40
        assert {r.time for r in repairs} == {t0 + 8.0}


class RecordingSimulator(HistorySimulator):
    def __init__(self, *args, **kwargs):
        super().__init__(*args, **kwargs)
        self.test_times = []

    def periodic_test(self, division, now):
        self.test_times.append((division, now))
        return super().periodic_test(division, now)


def _recorded_schedule():
    sim = RecordingSimulator(PLANT, model(), SimulationPolicy(), 0)
    sim.run()
    return sim.test_times


SCHEDULE = _recorded_schedule()


class TestPeriodicTests:
    def test_schedule(self):
        for div in range(4):
            times = [t for d, t in SCHEDULE if d == div]
            expected = [3285.0 * div + 13140.0 * m for m in range(7) if 3285.0 * div + 13140.0 * m <= 87600]
            assert times == pytest.approx(expected)

    @given(st.floats(0.0, 87600.0 - 13140.0).map(lambda x: round(x, 3)))
    @settings(max_examples=200, deadline=None)
    def test_each_division_once_per_window(self, start):
        in_window = [d for d, t in SCHEDULE if start <= t < start + 13140.0]
        assert sorted(in_window) == [0, 1, 2, 3]

    def test_hidden_failure_revealed_in_division_2(self):
        sim = HistorySimulator(PLANT, model(), SimulationPolicy(record_log=True), 0)
        e = PLANT.element_id(2, 1, "C1")
        assert sim.fail(e, INDEPENDENT_NSA, False, 100.0)
        assert sim.ref_down[e] and not sim.vis_down[e]
        assert sim.periodic_test(2, 6570.0) == [e]
        assert sim.states[e].mode == UNDER_REPAIR and sim.vis_down[e]
        assert sim.periodic_test(2, 19710.0) == []

    def test_nsa_latency_until_test(self):
        policy = SimulationPolicy(mission_hours=87600.0, record_log=True)
        res = run_history(single_element(), model(lam=1e-4, coverage=0.0), policy, 8)
        tests = [r for r in res.event_log if r.kind == PERIODIC_TEST]
        assert tests
        for r in tests:
            assert r.time / 13140.0 == pytest.approx(round(r.time / 13140.0))
        assert res.visible_downtime < res.reference_downtime


class TestLedgers:
    @pytest.mark.parametrize("seed", range(20))
    def test_sums_and_invariants(self, seed):
        policy = SimulationPolicy(check_invariants=True)
        m = model(mu=2e-4, omega=1e-6, rho=0.3, lam=1e-4)
        res = run_history(PLANT, m, policy, history_seed(99, seed))
        assert res.reference_downtime + res.reference_uptime == pytest.approx(87600.0, abs=1e-9)
        assert res.visible_downtime + res.visible_uptime == pytest.approx(87600.0, abs=1e-9)
        assert res.visible_downtime <= res.reference_downtime + 1e-9

    @pytest.mark.parametrize("seed", range(10))
    def test_full_coverage_no_hidden(self, seed):
        m = model(mu=1e-4, omega=1e-6, rho=0.3, lam=1e-4, coverage=1.0)
        res = run_history(PLANT, m, SimulationPolicy(), seed)
        assert res.visible_downtime == res.reference_downtime

    def test_determinism(self):
        m = ModelParams(DEFAULT_SHOCK)
        policy = SimulationPolicy(record_log=True)
        a = run_history(PLANT, replace(m, shock=replace(DEFAULT_SHOCK, mu=1e-4)), policy, 42)
        b = run_history(PLANT, replace(m, shock=replace(DEFAULT_SHOCK, mu=1e-4)), policy, 42)
        assert a == b
        assert a.event_log

    def test_log_counts_match(self):
        m = model(mu=1e-4, omega=1e-6, rho=0.3, lam=1e-5)
        res = run_history(PLANT, m, SimulationPolicy(record_log=True), 5)
        assert len(res.event_log) == sum(res.counts.values())
        times = [r.time for r in res.event_log]
        assert times == sorted(times)

    def test_stop_on_first_failure(self):
        m = model(mu=1e-3, rho=0.5)
        res = run_history(PLANT, m, SimulationPolicy(stop_on_first_failure=True), 2)
        assert res.first_system_failure == res.end_time
        assert res.failure_combination is not None


def mean_unavailability(topology, lam, repair, horizon, histories):
    policy = SimulationPolicy(
        mission_hours=horizon,
        repair=RepairPolicy(duration=repair),
        tests=ProofTestPolicy(enabled=False),
        shocks_enabled=False,
    )
    m = model(lam=lam, coverage=1.0)
    total = math.fsum(run_history(topology, m, policy, history_seed(7, h)).reference_downtime for h in range(histories))
    return total / (histories * horizon)


class TestRenewalOracle:
    LAM, REPAIR, HORIZON = 1e-2, 1.0, 400.0

    def test_single_element(self):
        u = self.LAM * self.REPAIR / (1 + self.LAM * self.REPAIR)
        sim = mean_unavailability(single_element(), self.LAM, self.REPAIR, self.HORIZON, 20_000)
        assert sim == pytest.approx(u, rel=0.02)

    @pytest.mark.slow
    def test_two_apu_system(self):
        topo = build_topology(
            ArchitectureConfig(divisions=1, apus_per_division=2, subsystems={"S": (0, 1)}, cards=("C1",))
        )
        u = self.LAM * self.REPAIR / (1 + self.LAM * self.REPAIR)
        expected = 1 - (1 - u) ** 2
        sim = mean_unavailability(topo, self.LAM, self.REPAIR, self.HORIZON, 100_000)
        assert sim == pytest.approx(expected, rel=0.02)
