"""One receding-horizon planning cycle: enumerate, simulate, score, solve, pick."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping

import numpy as np

from .actions import (
    DecisionSequence,
    EgoDecision,
    PruneRules,
    SvAction,
    build_action_tuples,
    default_forbidden_transitions,
    enumerate_ego_sequences,
)
from .costs import Belief, GameMatrix, build_game_from_batch, update_belief
from .forward_sim import BatchRollout, simulate_batch
from .game import Equilibrium, EquilibriumKind, Player, find_pure_nash, select_action, stackelberg
from .scenario import ScenarioConfig
from .world import WorldSnapshot

__all__ = ["CycleResult", "plan_cycle"]


@dataclass
class CycleResult:
    """Everything one planning cycle produced."""

    game: GameMatrix
    rollout: BatchRollout
    row: int
    col: int
    kind: str
    fallback_used: bool
    nash_cells: list[Equilibrium]
    se_ev: Equilibrium
    se_sv: Equilibrium

    @property
    def tuple_index(self) -> int:
        return self.row * len(self.game.cols) + self.col

    @property
    def chosen_sequence(self) -> DecisionSequence:
        return self.game.cols[self.col]

    @property
    def chosen_sv_action(self) -> SvAction:
        return self.game.rows[self.row]

    @property
    def partner_id(self) -> str | None:
        return self.game.col_partners[self.col]

    def ego_inputs(self, world: WorldSnapshot, n_steps: int | None = None) -> np.ndarray:
        """Planned ego (a, delta) trace of the selected rollout, first n_steps rows."""
        trace = self.rollout.inputs[self.tuple_index, world.ego_index]
        return trace if n_steps is None else trace[:n_steps]

    def partner_accel_predictions(self, world: WorldSnapshot,
                                  n_steps: int) -> dict[SvAction, np.ndarray] | None:
        """Per-mode predicted partner accelerations over the execution window."""
        pid = self.partner_id
        if pid is None:
            return None
        p = world.index_of(pid)
        m = len(self.game.cols)
        return {
            SvAction.ASSERT: self.rollout.inputs[self.col, p, :n_steps, 0].copy(),
            SvAction.YIELD: self.rollout.inputs[m + self.col, p, :n_steps, 0].copy(),
        }


def _prune_rules(cfg: ScenarioConfig, root: EgoDecision) -> PruneRules:
    forbidden = default_forbidden_transitions() if cfg.prune.use_default_forbidden else frozenset()
    return PruneRules(root=root, max_decision_changes=cfg.prune.max_decision_changes,
                      forbidden_transitions=forbidden)


def _info_gain_extra(rollout: BatchRollout, world: WorldSnapshot,
                     beliefs: Mapping[str, Belief], cfg: ScenarioConfig) -> np.ndarray:
    """Ego cost addend rewarding rollouts expected to sharpen the belief."""
    k_total = len(rollout.tuples)
    m = k_total // 2
    extra = np.zeros(k_total)
    for k in range(k_total):
        pid = rollout.partner_ids[k]
        if pid is None:
            continue
        prior = beliefs.get(pid, Belief.uniform())
        p = world.index_of(pid)
        col = k % m
        trace = rollout.inputs[k, p, :, 0]
        predicted = {SvAction.ASSERT: rollout.inputs[col, p, :, 0],
                     SvAction.YIELD: rollout.inputs[m + col, p, :, 0]}
        posterior = update_belief(prior, trace, predicted, cfg.beliefs.sigma_accel)
        extra[k] = cfg.weights.w_info * (posterior.entropy() - prior.entropy())
    return extra


def plan_cycle(world: WorldSnapshot, beliefs: Mapping[str, Belief],
               cfg: ScenarioConfig, root: EgoDecision,
               planner: str | None = None) -> CycleResult:
    """Run the full pipeline for one cycle and select an action tuple.

    planner overrides cfg.planner: "nash" applies the equilibrium selection
    policy, "stackelberg-ev" always plays the leader commitment, and
    "lowest-cost" picks the column with the lowest belief-expected ego cost.
    """
    kind_cfg = planner if planner is not None else cfg.planner
    seqs = enumerate_ego_sequences(_prune_rules(cfg, root), cfg.sim.horizon)
    if not seqs:
        raise ValueError(f"no decision sequences reachable from root {root}")
    tuples = build_action_tuples(seqs, [SvAction.ASSERT, SvAction.YIELD])
    rollout = simulate_batch(world, tuples, cfg.sim, cfg.planner_model())

    extra = None
    if cfg.weights.w_info != 0.0:
        extra = _info_gain_extra(rollout, world, beliefs, cfg)
    game = build_game_from_batch(rollout, world, beliefs, cfg.weights, ev_extra=extra)

    nash_cells = find_pure_nash(game)
    se_ev = stackelberg(game, Player.EV)
    se_sv = stackelberg(game, Player.SV)

    if kind_cfg == "nash":
        sel = select_action(game)
        row, col = sel.chosen.row, sel.chosen.col
        kind = sel.chosen.kind.value
        fallback = sel.fallback_used
    elif kind_cfg == "stackelberg-ev":
        row, col = se_ev.row, se_ev.col
        kind = EquilibriumKind.STACKELBERG_EV_LEADER.value
        fallback = False
    elif kind_cfg == "lowest-cost":
        per_col = [beliefs.get(p, Belief.uniform()) if p is not None else Belief.uniform()
                   for p in game.col_partners]
        prob = np.array([[bel.of(r) for bel in per_col] for r in game.rows])
        expected = (prob * game.ev).sum(axis=0)
        col = int(np.argmin(expected))
        row = 0 if per_col[col].p_assert >= 0.5 else 1
        kind = "lowest-cost"
        fallback = False
    else:
        raise ValueError(f"unknown planner kind: {kind_cfg}")

    return CycleResult(game=game, rollout=rollout, row=row, col=col, kind=kind,
                       fallback_used=fallback, nash_cells=nash_cells,
                       se_ev=se_ev, se_sv=se_sv)
