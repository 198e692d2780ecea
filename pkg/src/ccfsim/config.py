"""Campaign configuration files (TOML).

Four sections: ``[architecture]``, ``[model]`` (with ``[model.orientation]``),
``[run]`` and ``[output]``. Every key is optional; defaults reproduce the
reference plant and parameter set. Unknown keys are rejected.
"""

from __future__ import annotations

import math
import sys
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any

import tomli_w

if sys.version_info >= (3, 11):
    import tomllib
else:  # pragma: no cover
    import tomli as tomllib

from .atwood import BINOMIAL, COEFFICIENT_FREE, AtwoodDomainError, ShockModelParams, solve_rates_analytic
from .engine import (
    COMPETING_CLOCKS,
    COVERAGE_SPLIT,
    MISSION_HOURS,
    TEST_INTERVAL_HOURS,
    ModelParams,
    ProofTestPolicy,
    RepairPolicy,
    SimulationPolicy,
)
from .shocks import CONTINUOUS, ROUNDED_HOURS, OrientationConfig, orientation_for_subsystem
from .topology import ArchitectureConfig, Topology, TopologyError, build_topology

DEFAULT_PAIRS = ((0.1, 0.9), (0.2, 0.8), (0.3, 0.7), (0.4, 0.6))
DEFAULT_RHOS = (0.2, 0.33, 0.5)


class ConfigError(ValueError):
    def __init__(self, key: str, value: Any, reason: str):
        self.key = key
        self.value = value
        super().__init__(f"{key} = {value!r}: {reason}")


@dataclass(frozen=True)
class OrientationSection:
    enabled: bool = False
    subset_a: str = "SSA"
    p_a: float = 0.5
    pairs: tuple[tuple[float, float], ...] = DEFAULT_PAIRS


@dataclass(frozen=True)
class ModelSection:
    alpha_nonlethal: float = 0.405
    beta_lethal: float = 5e-3
    lambda_ind: float = 2.35e-6
    rho: tuple[float, ...] = DEFAULT_RHOS
    # None: solved analytically from alpha, beta, rho and lambda_ind
    mu: float | None = None
    omega: float | None = None
    coverage: float = 0.85
    variant: str = COEFFICIENT_FREE
    rounding: str = CONTINUOUS
    per_victim_detection: bool = False
    independent_sampling: str = COMPETING_CLOCKS
    orientation: OrientationSection = field(default_factory=OrientationSection)


@dataclass(frozen=True)
class RunSection:
    histories: int = 10_000
    mission_hours: float = MISSION_HOURS
    seed: int = 12345
    stop_on_first_failure: bool = False
    jobs: int = 1
    repair_hours: float = 8.0
    repair_distribution: str = "constant"
    repair_crews: str = "unlimited"
    tests_enabled: bool = True
    test_interval_hours: float = TEST_INTERVAL_HOURS
    test_stagger_hours: float | None = None
    check_invariants: bool = False


@dataclass(frozen=True)
class OutputSection:
    dir: str = "results"
    csv: str = "results.csv"
    summary: str = "summary.txt"
    rex: str | None = None


@dataclass(frozen=True)
class CampaignConfig:
    architecture: ArchitectureConfig = field(default_factory=ArchitectureConfig)
    model: ModelSection = field(default_factory=ModelSection)
    run: RunSection = field(default_factory=RunSection)
    output: OutputSection = field(default_factory=OutputSection)

    def topology(self) -> Topology:
        try:
            return build_topology(self.architecture)
        except TopologyError as exc:
            raise ConfigError("architecture", _arch_dict(self.architecture), str(exc)) from None

    def shock_params(self, rho: float) -> ShockModelParams:
        m = self.model
        n = self.topology().n_elements
        if m.mu is None or m.omega is None:
            mu, omega = solve_rates_analytic(n, m.alpha_nonlethal, m.beta_lethal, rho, m.lambda_ind, m.variant)
            if m.mu is not None:
                mu = m.mu
            if m.omega is not None:
                omega = m.omega
        else:
            mu, omega = m.mu, m.omega
        try:
            return ShockModelParams(mu, omega, rho, m.lambda_ind, m.alpha_nonlethal, m.beta_lethal)
        except AtwoodDomainError as exc:
            raise ConfigError("model", {"rho": rho, "mu": mu, "omega": omega}, str(exc)) from None

    def orientation(self, p_a: float | None = None) -> OrientationConfig | None:
        o = self.model.orientation
        if p_a is None:
            if not o.enabled:
                return None
            p_a = o.p_a
        return orientation_for_subsystem(self.topology(), o.subset_a, p_a)

    def model_params(self, rho: float, p_a: float | None = None) -> ModelParams:
        orientation = self.orientation(p_a)
        if orientation is not None:
            try:
                orientation.probabilities(self.topology().n_elements, rho)
            except AtwoodDomainError as exc:
                pair = [orientation.p_a, 1.0 - orientation.p_a]
                raise ConfigError("model.orientation.pairs", pair, f"at rho = {rho}: {exc}") from None
        return ModelParams(self.shock_params(rho), self.model.coverage, orientation)

    def policy(self, **overrides) -> SimulationPolicy:
        r, m = self.run, self.model
        policy = SimulationPolicy(
            mission_hours=r.mission_hours,
            repair=RepairPolicy(r.repair_hours, r.repair_distribution, r.repair_crews),
            tests=ProofTestPolicy(r.test_interval_hours, r.test_stagger_hours, r.tests_enabled),
            stop_on_first_failure=r.stop_on_first_failure,
            independent_sampling=m.independent_sampling,
            rounding=m.rounding,
            per_victim_detection=m.per_victim_detection,
            check_invariants=r.check_invariants,
        )
        return replace(policy, **overrides)


# -- parsing -------------------------------------------------------------------


class _Section:
    """Typed reads from one TOML table, tracking which keys were consumed."""

    def __init__(self, prefix: str, data: Any):
        if not isinstance(data, dict):
            raise ConfigError(prefix, data, "expected a table")
        self.prefix = prefix
        self.data = data
        self.used: set[str] = set()

    def key(self, name: str) -> str:
        return f"{self.prefix}.{name}" if self.prefix else name

    def get(self, name: str, default: Any) -> Any:
        self.used.add(name)
        return self.data.get(name, default)

    def number(self, name: str, default, lo=None, hi=None, lo_open=False, integer=False):
        value = self.get(name, default)
        if value is None:
            return None
        ok_types = (int,) if integer else (int, float)
        if isinstance(value, bool) or not isinstance(value, ok_types):
            raise ConfigError(self.key(name), value, "expected an integer" if integer else "expected a number")
        if not integer and not math.isfinite(value):
            raise ConfigError(self.key(name), value, "must be finite")
        if lo is not None and (value < lo or (lo_open and value == lo)):
            raise ConfigError(self.key(name), value, f"must be {'>' if lo_open else '>='} {lo}")
        if hi is not None and value > hi:
            raise ConfigError(self.key(name), value, f"must be <= {hi}")
        return value if integer else float(value)

    def boolean(self, name: str, default: bool) -> bool:
        value = self.get(name, default)
        if not isinstance(value, bool):
            raise ConfigError(self.key(name), value, "expected true or false")
        return value

    def string(self, name: str, default, choices=None):
        value = self.get(name, default)
        if value is None:
            return None
        if not isinstance(value, str):
            raise ConfigError(self.key(name), value, "expected a string")
        if choices is not None and value not in choices:
            raise ConfigError(self.key(name), value, f"must be one of {list(choices)}")
        return value

    def table(self, name: str) -> "_Section":
        self.used.add(name)
        return _Section(self.key(name), self.data.get(name, {}))

    def finish(self) -> None:
        extra = sorted(set(self.data) - self.used)
        if extra:
            raise ConfigError(self.key(extra[0]), self.data[extra[0]], "unknown key")


def _int_list(sec: _Section, name: str, default) -> tuple[int, ...]:
    value = sec.get(name, list(default))
    if not isinstance(value, list) or not all(isinstance(v, int) and not isinstance(v, bool) for v in value):
        raise ConfigError(sec.key(name), value, "expected a list of integers")
    return tuple(value)


def _parse_architecture(sec: _Section) -> ArchitectureConfig:
    d = ArchitectureConfig()
    subsystems = sec.get("subsystems", None)
    if subsystems is None:
        subsystems = dict(d.subsystems)
    elif not isinstance(subsystems, dict) or not subsystems:
        raise ConfigError(sec.key("subsystems"), subsystems, "expected a table of name = [apu, ...]")
    else:
        sub = _Section(sec.key("subsystems"), subsystems)
        subsystems = {name: _int_list(sub, name, ()) for name in subsystems}
    cards = sec.get("cards", list(d.cards))
    if not isinstance(cards, list) or not all(isinstance(c, str) for c in cards):
        raise ConfigError(sec.key("cards"), cards, "expected a list of card names")
    arch = ArchitectureConfig(
        divisions=sec.number("divisions", d.divisions, lo=1, integer=True),
        apus_per_division=sec.number("apus_per_division", d.apus_per_division, lo=1, integer=True),
        subsystems=subsystems,
        vote=sec.string("vote", d.vote),
        gapu_fail_threshold=sec.number("gapu_fail_threshold", None, lo=1, integer=True),
        cards=tuple(cards),
        c2_granularity=sec.string("c2_granularity", d.c2_granularity),
        c2_cards=_int_list(sec, "c2_cards", d.c2_cards),
    )
    sec.finish()
    try:
        build_topology(arch)
    except TopologyError as exc:
        raise ConfigError(sec.prefix, _arch_dict(arch), str(exc)) from None
    return arch


def _parse_orientation(sec: _Section, arch: ArchitectureConfig) -> OrientationSection:
    d = OrientationSection()
    subset = sec.string("subset_a", d.subset_a)
    if subset not in arch.subsystems:
        raise ConfigError(sec.key("subset_a"), subset, f"unknown subsystem; known: {list(arch.subsystems)}")
    if len(arch.subsystems) < 2:
        raise ConfigError(sec.key("subset_a"), subset, "orientation needs at least two subsystems")
    raw_pairs = sec.get("pairs", [list(p) for p in d.pairs])
    if not isinstance(raw_pairs, list) or not raw_pairs:
        raise ConfigError(sec.key("pairs"), raw_pairs, "expected a non-empty list of [p_a, p_b]")
    pairs = []
    for pair in raw_pairs:
        if (
            not isinstance(pair, list)
            or len(pair) != 2
            or not all(isinstance(p, (int, float)) and not isinstance(p, bool) for p in pair)
        ):
            raise ConfigError(sec.key("pairs"), pair, "each pair must be [p_a, p_b]")
        p_a, p_b = float(pair[0]), float(pair[1])
        if not (0.0 <= p_a <= 1.0 and 0.0 <= p_b <= 1.0) or abs(p_a + p_b - 1.0) > 1e-9:
            raise ConfigError(sec.key("pairs"), pair, "p_a and p_b must lie in [0, 1] and sum to 1")
        pairs.append((p_a, p_b))
    out = OrientationSection(
        enabled=sec.boolean("enabled", d.enabled),
        subset_a=subset,
        p_a=sec.number("p_a", d.p_a, lo=0.0, hi=1.0),
        pairs=tuple(pairs),
    )
    sec.finish()
    return out


def _parse_model(sec: _Section, arch: ArchitectureConfig) -> ModelSection:
    d = ModelSection()
    rho = sec.get("rho", list(d.rho))
    if isinstance(rho, (int, float)) and not isinstance(rho, bool):
        rho = [rho]
    if not isinstance(rho, list) or not rho or not all(
        isinstance(r, (int, float)) and not isinstance(r, bool) and 0.0 <= r <= 1.0 for r in rho
    ):
        raise ConfigError(sec.key("rho"), rho, "expected a number or list of numbers in [0, 1]")
    alpha = sec.number("alpha_nonlethal", d.alpha_nonlethal, lo=0.0, hi=1.0)
    beta = sec.number("beta_lethal", d.beta_lethal, lo=0.0, hi=1.0)
    if alpha + beta >= 1.0:
        raise ConfigError(sec.key("beta_lethal"), beta, f"alpha_nonlethal + beta_lethal must be < 1 (alpha = {alpha})")
    model = ModelSection(
        alpha_nonlethal=alpha,
        beta_lethal=beta,
        lambda_ind=sec.number("lambda_ind", d.lambda_ind, lo=0.0),
        rho=tuple(float(r) for r in rho),
        mu=sec.number("mu", None, lo=0.0),
        omega=sec.number("omega", None, lo=0.0),
        coverage=sec.number("coverage", d.coverage, lo=0.0, hi=1.0),
        variant=sec.string("variant", d.variant, (COEFFICIENT_FREE, BINOMIAL)),
        rounding=sec.string("rounding", d.rounding, (CONTINUOUS, ROUNDED_HOURS)),
        per_victim_detection=sec.boolean("per_victim_detection", d.per_victim_detection),
        independent_sampling=sec.string(
            "independent_sampling", d.independent_sampling, (COMPETING_CLOCKS, COVERAGE_SPLIT)
        ),
        orientation=_parse_orientation(sec.table("orientation"), arch),
    )
    sec.finish()
    return model


def _parse_run(sec: _Section) -> RunSection:
    d = RunSection()
    run = RunSection(
        histories=sec.number("histories", d.histories, lo=1, integer=True),
        mission_hours=sec.number("mission_hours", d.mission_hours, lo=0.0, lo_open=True),
        seed=sec.number("seed", d.seed, lo=0, integer=True),
        stop_on_first_failure=sec.boolean("stop_on_first_failure", d.stop_on_first_failure),
        jobs=sec.number("jobs", d.jobs, lo=0, integer=True),
        repair_hours=sec.number("repair_hours", d.repair_hours, lo=0.0),
        repair_distribution=sec.string("repair_distribution", d.repair_distribution, ("constant", "exponential")),
        repair_crews=sec.string("repair_crews", d.repair_crews, ("unlimited", "per_division")),
        tests_enabled=sec.boolean("tests_enabled", d.tests_enabled),
        test_interval_hours=sec.number("test_interval_hours", d.test_interval_hours, lo=0.0, lo_open=True),
        test_stagger_hours=sec.number("test_stagger_hours", None, lo=0.0),
        check_invariants=sec.boolean("check_invariants", d.check_invariants),
    )
    sec.finish()
    return run


def _parse_output(sec: _Section) -> OutputSection:
    d = OutputSection()
    out = OutputSection(
        dir=sec.string("dir", d.dir),
        csv=sec.string("csv", d.csv),
        summary=sec.string("summary", d.summary),
        rex=sec.string("rex", None),
    )
    sec.finish()
    return out


def config_from_dict(data: dict) -> CampaignConfig:
    root = _Section("", data)
    arch = _parse_architecture(root.table("architecture"))
    model = _parse_model(root.table("model"), arch)
    run = _parse_run(root.table("run"))
    output = _parse_output(root.table("output"))
    extra = sorted(set(data) - root.used)
    if extra:
        raise ConfigError(extra[0], data[extra[0]], "unknown section")
    return CampaignConfig(arch, model, run, output)


def parse_config(text: str) -> CampaignConfig:
    try:
        data = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError("config", "<file>", f"invalid TOML: {exc}") from None
    return config_from_dict(data)


def load_config(path: str | Path) -> CampaignConfig:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError("config", str(path), f"cannot read file: {exc.strerror}") from None
    return parse_config(text)


# -- serialization -------------------------------------------------------------


def _arch_dict(a: ArchitectureConfig) -> dict:
    out = {
        "divisions": a.divisions,
        "apus_per_division": a.apus_per_division,
        "vote": a.vote,
        "cards": list(a.cards),
        "c2_granularity": a.c2_granularity,
        "c2_cards": list(a.c2_cards),
        "subsystems": {k: list(v) for k, v in a.subsystems.items()},
    }
    if a.gapu_fail_threshold is not None:
        out["gapu_fail_threshold"] = a.gapu_fail_threshold
    return out


def _plain(obj) -> dict:
    out = {}
    for name, value in vars(obj).items():
        if value is None:
            continue
        if isinstance(value, tuple):
            value = [list(v) if isinstance(v, tuple) else v for v in value]
        out[name] = value
    return out


def config_to_dict(cfg: CampaignConfig) -> dict:
    model = _plain(cfg.model)
    model["orientation"] = _plain(cfg.model.orientation)
    return {
        "architecture": _arch_dict(cfg.architecture),
        "model": model,
        "run": _plain(cfg.run),
        "output": _plain(cfg.output),
    }


def dump_config(cfg: CampaignConfig) -> str:
    return tomli_w.dumps(config_to_dict(cfg))
