"""Semantic decision vocabulary and pruned enumeration of ego decision sequences."""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from enum import IntEnum

__all__ = [
    "GapChoice",
    "LateralDecision",
    "SvAction",
    "EgoDecision",
    "DecisionSequence",
    "PruneRules",
    "ALL_EGO_DECISIONS",
    "lateral_decision_set",
    "default_forbidden_transitions",
    "enumerate_ego_sequences",
    "build_action_tuples",
]


class GapChoice(IntEnum):
    """Target gap. GAP_0 is the current lane (stay behind the front vehicle, no lane change)."""

    GAP_0 = 0
    GAP_1 = 1
    GAP_2 = 2


class LateralDecision(IntEnum):
    LANE_KEEP = 0
    LEFT_CHANGE = 1
    LEFT_PROBE = 2


class SvAction(IntEnum):
    """Behavior mode of the surrounding-vehicle group."""

    ASSERT = 0
    YIELD = 1


_LATERAL_SETS = {
    GapChoice.GAP_0: frozenset({LateralDecision.LANE_KEEP}),
    GapChoice.GAP_1: frozenset(LateralDecision),
    GapChoice.GAP_2: frozenset(LateralDecision),
}


def lateral_decision_set(gap: GapChoice) -> frozenset[LateralDecision]:
    """Lateral decisions available for a gap: the current-lane gap only allows lane keeping."""
    return _LATERAL_SETS[GapChoice(gap)]


@dataclass(frozen=True, order=True)
class EgoDecision:
    """One semantic step: a gap choice plus a lateral decision valid for that gap."""

    gap: GapChoice
    lateral: LateralDecision

    def __post_init__(self):
        if self.lateral not in lateral_decision_set(self.gap):
            raise ValueError(f"{self.lateral.name} not available for {self.gap.name}")

    def __str__(self):
        code = {LateralDecision.LANE_KEEP: "LK",
                LateralDecision.LEFT_CHANGE: "LC",
                LateralDecision.LEFT_PROBE: "LP"}[self.lateral]
        return f"{int(self.gap)}{code}"


ALL_EGO_DECISIONS: tuple[EgoDecision, ...] = tuple(
    EgoDecision(g, d) for g in GapChoice for d in sorted(lateral_decision_set(g))
)


@dataclass(frozen=True, order=True)
class DecisionSequence:
    """A length-H sequence of ego decisions."""

    steps: tuple[EgoDecision, ...]

    def __post_init__(self):
        if not self.steps:
            raise ValueError("DecisionSequence must contain at least one step")

    def __len__(self):
        return len(self.steps)

    def __iter__(self):
        return iter(self.steps)

    def __getitem__(self, k):
        return self.steps[k]

    def __str__(self):
        return ">".join(str(s) for s in self.steps)


def default_forbidden_transitions() -> frozenset[tuple[EgoDecision, EgoDecision]]:
    """Adjacent pairs that switch gap while committed to a lane change, which a
    human driver would not do mid-maneuver."""
    lc = LateralDecision.LEFT_CHANGE
    return frozenset(
        (a, b)
        for a, b in itertools.product(ALL_EGO_DECISIONS, repeat=2)
        if a.lateral == lc and b.lateral == lc and a.gap != b.gap
    )


@dataclass(frozen=True)
class PruneRules:
    """Decision-tree pruning configuration.

    The root is the decision executed in the previous planning cycle; the step
    from the root to a sequence's first element counts toward the change budget
    and is screened against the forbidden transitions.
    """

    root: EgoDecision = EgoDecision(GapChoice.GAP_0, LateralDecision.LANE_KEEP)
    max_decision_changes: int = 2
    forbidden_transitions: frozenset[tuple[EgoDecision, EgoDecision]] = field(
        default_factory=default_forbidden_transitions
    )

    def __post_init__(self):
        if self.max_decision_changes < 0:
            raise ValueError("max_decision_changes must be >= 0")


def enumerate_ego_sequences(rules: PruneRules, horizon: int) -> list[DecisionSequence]:
    """Enumerate all decision sequences of length `horizon` reachable from the root.

    A sequence is kept when every adjacent pair (including root -> first step)
    avoids the forbidden transitions and the total number of step-to-step
    changes stays within the budget. Output order is deterministic:
    lexicographic over step index with decisions in (gap, lateral) enum order.
    Returns [] when the root itself is invalid, which signals a configuration
    error upstream.
    """
    if horizon < 1:
        raise ValueError("horizon must be >= 1")
    try:
        root = EgoDecision(rules.root.gap, rules.root.lateral)
    except ValueError:
        return []

    out: list[DecisionSequence] = []
    prefix: list[EgoDecision] = []

    def walk(prev: EgoDecision, changes: int):
        depth = len(prefix)
        if depth == horizon:
            out.append(DecisionSequence(tuple(prefix)))
            return
        for cand in ALL_EGO_DECISIONS:
            changed = cand != prev
            if changes + changed > rules.max_decision_changes:
                continue
            if (prev, cand) in rules.forbidden_transitions:
                continue
            prefix.append(cand)
            walk(cand, changes + changed)
            prefix.pop()

    walk(root, 0)
    return out


def build_action_tuples(ego_seqs: list[DecisionSequence],
                        sv_actions: list[SvAction]) -> list[tuple[SvAction, DecisionSequence]]:
    """Cartesian product of group actions and ego sequences, row-major over the group action."""
    if not ego_seqs or not sv_actions:
        raise ValueError("both action lists must be nonempty")
    return [(sv, seq) for sv in sv_actions for seq in ego_seqs]
