"""Protection-system architecture and its hierarchical voting logic.

Divisions hold APUs, APUs hold card elements. The same-index APUs across
divisions form a GAPU (the CCF group voting unit), and APU indices are
partitioned into subsystems (SSA, SSB by default).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Sequence

VOTE_ANY = "1oo2"  # one subsystem failure fails the system
VOTE_ALL = "2oo2"  # every subsystem must fail
VOTE_ALIASES = {
    "1oo2": VOTE_ANY,
    "one_subsystem_failure_fails_system": VOTE_ANY,
    "2oo2": VOTE_ALL,
    "both_subsystems_must_fail": VOTE_ALL,
}

SERIES_BLOCK = "series"
PER_CARD = "per_card"


class TopologyError(ValueError):
    pass


@dataclass(frozen=True)
class ArchitectureConfig:
    divisions: int = 4
    apus_per_division: int = 5
    subsystems: Mapping[str, Sequence[int]] = field(
        default_factory=lambda: {"SSA": (0, 1, 2), "SSB": (3, 4)}
    )
    vote: str = VOTE_ANY
    # None means divisions - 1 (3-out-of-4 with four divisions)
    gapu_fail_threshold: int | None = None
    cards: Sequence[str] = ("C1", "C2")
    c2_granularity: str = SERIES_BLOCK
    # physical C2 cards per APU index, used only at per-card granularity
    c2_cards: Sequence[int] = (4, 4, 3, 3, 3)


@dataclass(frozen=True)
class Element:
    id: int
    division: int
    apu: int
    card: str
    subsystem: str

    @property
    def gapu(self) -> int:
        return self.apu

    @property
    def name(self) -> str:
        return f"D{self.division}.APU{self.apu}.{self.card}"


@dataclass(frozen=True)
class SystemStatus:
    apu_down: tuple[tuple[bool, ...], ...]  # [division][apu]
    gapu_down: tuple[bool, ...]
    subsystem_down: Mapping[str, bool]
    system_down: bool

    def dominated_by(self, other: "SystemStatus") -> bool:
        """True when every failed unit here is also failed in ``other``."""
        if self.system_down and not other.system_down:
            return False
        if any(a and not b for a, b in zip(self.gapu_down, other.gapu_down)):
            return False
        if any(self.subsystem_down[k] and not other.subsystem_down[k] for k in self.subsystem_down):
            return False
        for row, other_row in zip(self.apu_down, other.apu_down):
            if any(a and not b for a, b in zip(row, other_row)):
                return False
        return True


@dataclass(frozen=True)
class Topology:
    config: ArchitectureConfig
    elements: tuple[Element, ...]
    vote: str
    threshold: int
    subsystem_of_apu: tuple[str, ...]
    subsystem_names: tuple[str, ...]
    # element ids per APU, indexed [division][apu]
    apu_members: tuple[tuple[tuple[int, ...], ...], ...]

    @property
    def n_elements(self) -> int:
        return len(self.elements)

    @property
    def divisions(self) -> int:
        return self.config.divisions

    @property
    def apus_per_division(self) -> int:
        return self.config.apus_per_division

    def element_id(self, division: int, apu: int, card: str) -> int:
        for e in self.apu_members[division][apu]:
            if self.elements[e].card == card:
                return e
        raise TopologyError(f"no element D{division}.APU{apu}.{card}")

    def subsystem_elements(self, name: str) -> tuple[int, ...]:
        if name not in self.subsystem_names:
            raise TopologyError(f"unknown subsystem {name!r}")
        return tuple(e.id for e in self.elements if e.subsystem == name)

    def division_elements(self, division: int) -> tuple[int, ...]:
        return tuple(e for members in self.apu_members[division] for e in members)

    def system_down(self, down: Sequence[bool]) -> bool:
        """Fast path of :func:`evaluate` returning only the system verdict."""
        any_vote = self.vote == VOTE_ANY
        sub_down = dict.fromkeys(self.subsystem_names, False)
        for apu in range(self.apus_per_division):
            sub = self.subsystem_of_apu[apu]
            if sub_down[sub]:
                continue
            failed = 0
            for div in range(self.divisions):
                for e in self.apu_members[div][apu]:
                    if down[e]:
                        failed += 1
                        break
            if failed >= self.threshold:
                if any_vote:
                    return True
                sub_down[sub] = True
        if any_vote:
            return False
        return all(sub_down.values())


def build_topology(config: ArchitectureConfig | None = None) -> Topology:
    config = config or ArchitectureConfig()
    if config.divisions < 1 or config.apus_per_division < 1:
        raise TopologyError("need at least one division and one APU per division (empty GAPU)")
    if not config.cards:
        raise TopologyError("an APU needs at least one card type")
    if len(set(config.cards)) != len(config.cards):
        raise TopologyError(f"duplicate card types in {list(config.cards)}")
    try:
        vote = VOTE_ALIASES[config.vote]
    except KeyError:
        raise TopologyError(f"unknown vote configuration {config.vote!r}") from None
    threshold = config.gapu_fail_threshold
    if threshold is None:
        threshold = max(1, config.divisions - 1)
    if not 1 <= threshold <= config.divisions:
        raise TopologyError(
            f"gapu_fail_threshold must lie in [1, {config.divisions}], got {threshold}"
        )
    if config.c2_granularity not in (SERIES_BLOCK, PER_CARD):
        raise TopologyError(f"unknown c2_granularity {config.c2_granularity!r}")

    owner: dict[int, str] = {}
    for name, apus in config.subsystems.items():
        if not apus:
            raise TopologyError(f"subsystem {name!r} has no APU")
        for apu in apus:
            if not 0 <= apu < config.apus_per_division:
                raise TopologyError(f"subsystem {name!r} references unknown APU {apu}")
            if apu in owner:
                raise TopologyError(f"APU {apu} assigned to both {owner[apu]!r} and {name!r}")
            owner[apu] = name
    missing = [a for a in range(config.apus_per_division) if a not in owner]
    if missing:
        raise TopologyError(f"APUs {missing} belong to no subsystem")

    if config.c2_granularity == PER_CARD and "C2" in config.cards:
        if len(config.c2_cards) != config.apus_per_division:
            raise TopologyError(
                f"c2_cards needs one count per APU index ({config.apus_per_division}), "
                f"got {list(config.c2_cards)}"
            )

    elements: list[Element] = []
    members: list[tuple[tuple[int, ...], ...]] = []
    for div in range(config.divisions):
        row = []
        for apu in range(config.apus_per_division):
            ids = []
            for card in _card_labels(config, apu):
                e = Element(len(elements), div, apu, card, owner[apu])
                elements.append(e)
                ids.append(e.id)
            row.append(tuple(ids))
        members.append(tuple(row))

    return Topology(
        config=config,
        elements=tuple(elements),
        vote=vote,
        threshold=threshold,
        subsystem_of_apu=tuple(owner[a] for a in range(config.apus_per_division)),
        subsystem_names=tuple(config.subsystems),
        apu_members=tuple(members),
    )


def _card_labels(config: ArchitectureConfig, apu: int) -> list[str]:
    labels = []
    for card in config.cards:
        if card == "C2" and config.c2_granularity == PER_CARD:
            labels.extend(f"C2.{i}" for i in range(config.c2_cards[apu]))
        else:
            labels.append(card)
    return labels


def evaluate(topology: Topology, element_down: Sequence[bool]) -> SystemStatus:
    """Evaluate the voting logic bottom-up from per-element down flags."""
    if len(element_down) != topology.n_elements:
        raise TopologyError(
            f"expected {topology.n_elements} element states, got {len(element_down)}"
        )
    apu_down = tuple(
        tuple(any(element_down[e] for e in members) for members in row)
        for row in topology.apu_members
    )
    gapu_down = tuple(
        sum(apu_down[div][apu] for div in range(topology.divisions)) >= topology.threshold
        for apu in range(topology.apus_per_division)
    )
    subsystem_down = {
        name: any(gapu_down[a] for a in range(topology.apus_per_division)
                  if topology.subsystem_of_apu[a] == name)
        for name in topology.subsystem_names
    }
    if topology.vote == VOTE_ANY:
        system = any(subsystem_down.values())
    else:
        system = all(subsystem_down.values())
    return SystemStatus(apu_down, gapu_down, subsystem_down, system)


def membership(topology: Topology, element_id: int) -> tuple[int, int, int, str]:
    """Return ``(division, apu, gapu, subsystem)`` of one element."""
    if not 0 <= element_id < topology.n_elements:
        raise TopologyError(f"unknown element id {element_id!r}")
    e = topology.elements[element_id]
    return e.division, e.apu, e.gapu, e.subsystem
