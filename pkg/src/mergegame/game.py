"""Pure-strategy equilibrium search and the action-selection policy.

The group of surrounding vehicles picks the row minimizing its belief-weighted
cost, the ego picks the column minimizing its own cost. Both players minimize;
a cell is a pure Nash equilibrium when neither side can improve unilaterally.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .costs import Belief, GameMatrix

__all__ = [
    "Player",
    "EquilibriumKind",
    "Equilibrium",
    "Selection",
    "find_pure_nash",
    "stackelberg",
    "select_action",
    "check_prop1_assumptions",
]


class Player(Enum):
    SV = "sv"
    EV = "ev"


class EquilibriumKind(Enum):
    NASH = "nash"
    STACKELBERG_EV_LEADER = "stackelberg-ev-leader"
    STACKELBERG_SV_LEADER = "stackelberg-sv-leader"


@dataclass(frozen=True)
class Equilibrium:
    row: int
    col: int
    kind: EquilibriumKind
    social_cost: float

    def cell(self) -> tuple[int, int]:
        return (self.row, self.col)


@dataclass(frozen=True)
class Selection:
    chosen: Equilibrium
    fallback_used: bool


def find_pure_nash(game: GameMatrix) -> list[Equilibrium]:
    """All cells where both players already play a best response, in row-major order."""
    sv, ev = game.sv_weighted, game.ev
    row_best = sv <= sv.min(axis=0, keepdims=True)
    col_best = ev <= ev.min(axis=1, keepdims=True)
    cells = np.argwhere(row_best & col_best)
    return [
        Equilibrium(int(r), int(c), EquilibriumKind.NASH, float(sv[r, c] + ev[r, c]))
        for r, c in cells
    ]


def _best_response_row(game: GameMatrix, col: int) -> int:
    """Group's best row against a fixed column; ties favor the leader (lower ego
    cost), then the lower index."""
    sv, ev = game.sv_weighted[:, col], game.ev[:, col]
    candidates = np.flatnonzero(sv <= sv.min())
    return int(candidates[np.argmin(ev[candidates])])


def _best_response_col(game: GameMatrix, row: int) -> int:
    """Ego's best column against a fixed row; ties favor the leader (lower group
    cost), then the lower index."""
    sv, ev = game.sv_weighted[row, :], game.ev[row, :]
    candidates = np.flatnonzero(ev <= ev.min())
    return int(candidates[np.argmin(sv[candidates])])


def stackelberg(game: GameMatrix, leader: Player) -> Equilibrium:
    """Leader commits first, follower best-responds; the leader minimizes its own
    cost over its actions given the follower's response map."""
    n_rows, n_cols = game.shape
    if leader == Player.EV:
        responses = [_best_response_row(game, c) for c in range(n_cols)]
        leader_costs = np.array([game.ev[responses[c], c] for c in range(n_cols)])
        c = int(np.argmin(leader_costs))
        r = responses[c]
        kind = EquilibriumKind.STACKELBERG_EV_LEADER
    else:
        responses = [_best_response_col(game, r) for r in range(n_rows)]
        leader_costs = np.array([game.sv_weighted[r, responses[r]] for r in range(n_rows)])
        r = int(np.argmin(leader_costs))
        c = responses[r]
        kind = EquilibriumKind.STACKELBERG_SV_LEADER
    return Equilibrium(r, c, kind, float(game.sv_weighted[r, c] + game.ev[r, c]))


def select_action(game: GameMatrix) -> Selection:
    """Lowest-social-cost Nash equilibrium when one exists; otherwise the
    Stackelberg equilibrium with the ego as the follower, flagged as fallback."""
    equilibria = find_pure_nash(game)
    if equilibria:
        best = min(equilibria, key=lambda e: (e.social_cost, e.row, e.col))
        return Selection(best, fallback_used=False)
    return Selection(stackelberg(game, Player.SV), fallback_used=True)


def check_prop1_assumptions(sv_costs, ev_costs, belief: Belief,
                            feasible_cols=None) -> bool:
    """Monotonicity preconditions for the assert-row equilibrium guarantee.

    Over every feasible column of a 2-row game (row 0 assert, row 1 yield):
    0 <= sv[0, m] <= sv[1, m] (politeness costs the group more) and
    ev[0, m] >= ev[1, m] >= 0 (the ego benefits from politeness), together with
    an assert belief of at least one half.
    """
    sv = np.asarray(sv_costs, dtype=float)
    ev = np.asarray(ev_costs, dtype=float)
    if sv.shape[0] != 2 or ev.shape != sv.shape:
        raise ValueError("expected matching 2-row cost arrays")
    if feasible_cols is None:
        mask = np.ones(sv.shape[1], dtype=bool)
    else:
        mask = np.asarray(feasible_cols, dtype=bool)
    if belief.p_assert < 0.5:
        return False
    if not mask.any():
        return True
    sv, ev = sv[:, mask], ev[:, mask]
    sv_ok = np.all(0.0 <= sv[0]) and np.all(sv[0] <= sv[1])
    ev_ok = np.all(ev[1] >= 0.0) and np.all(ev[0] >= ev[1])
    return bool(sv_ok and ev_ok)
