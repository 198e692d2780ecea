"""Attribution of a system failure to a combination of failure causes."""

from __future__ import annotations

from typing import Iterable, Mapping

from .topology import Topology

INDEPENDENT_SA = "independent_sa"
INDEPENDENT_NSA = "independent_nsa"
CCF_NONLETHAL = "ccf_nonlethal"
CCF_LETHAL = "ccf_lethal"
NO_CAUSE = "none"
CCF_CAUSES = frozenset({CCF_NONLETHAL, CCF_LETHAL})

CCF_ALONE = "ccf_alone"
SA_ONLY = "independent_sa_only"
NSA_ONLY = "independent_nsa_only"
SA_AND_NSA = "independent_sa_and_nsa"
CCF_PLUS_SA = "ccf_plus_sa"
CCF_PLUS_NSA = "ccf_plus_nsa"
COMBINATION_CLASSES = (CCF_ALONE, SA_ONLY, NSA_ONLY, SA_AND_NSA, CCF_PLUS_SA, CCF_PLUS_NSA)

# row labels of the published combination table
CLASS_LABELS = {
    CCF_ALONE: "DCC suffis.",
    SA_ONLY: "C. def SA",
    NSA_ONLY: "C. def NSA",
    SA_AND_NSA: "C. def SA et NSA",
    CCF_PLUS_SA: "C. DCC et def SA",
    CCF_PLUS_NSA: "C. DCC et def NSA",
}


def contributing_elements(
    topology: Topology, failed: Mapping[int, tuple[str, float]]
) -> tuple[int, ...]:
    """Minimal subset of the failed elements that still fails the system.

    Greedy removal: failed elements are tried oldest first (then by id) and
    dropped whenever the system stays down without them.
    """
    down = [False] * topology.n_elements
    for e in failed:
        down[e] = True
    if not topology.system_down(down):
        raise ValueError("the failed set does not fail the system")
    keep = set(failed)
    for e in sorted(failed, key=lambda e: (failed[e][1], e)):
        down[e] = False
        if topology.system_down(down):
            keep.discard(e)
        else:
            down[e] = True
    return tuple(sorted(keep))


def classify_causes(causes: Iterable[str]) -> str:
    """Map the causes of the contributing elements to one combination class.

    CCF together with both SA and NSA independent failures is reported as
    ``ccf_plus_nsa``: the latent NSA failure is the one a test would catch.
    """
    causes = set(causes)
    unknown = causes - CCF_CAUSES - {INDEPENDENT_SA, INDEPENDENT_NSA}
    if unknown or not causes:
        raise ValueError(f"cannot classify causes {sorted(causes)}")
    ccf = bool(causes & CCF_CAUSES)
    sa = INDEPENDENT_SA in causes
    nsa = INDEPENDENT_NSA in causes
    if ccf:
        if nsa:
            return CCF_PLUS_NSA
        return CCF_PLUS_SA if sa else CCF_ALONE
    if sa and nsa:
        return SA_AND_NSA
    return SA_ONLY if sa else NSA_ONLY


def classify_failed_set(
    topology: Topology, failed: Mapping[int, tuple[str, float]]
) -> tuple[str, tuple[int, ...]]:
    contributing = contributing_elements(topology, failed)
    return classify_causes(failed[e][0] for e in contributing), contributing
