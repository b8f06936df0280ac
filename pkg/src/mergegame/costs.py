"""Trajectory scoring, belief tracking, and cost-matrix assembly.

Each trajectory is scored with four nonnegative terms (safety band penalties,
squared speed error, squared jerk, squared lateral offset). The surrounding
vehicles are aggregated into one player by summing their costs, and each row
of the resulting matrix is scaled by one minus the belief assigned to that
row's group action.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .actions import DecisionSequence, SvAction
from .dynamics import rect_distance_arrays
from .forward_sim import BatchRollout, TrajectorySet
from .world import WorldSnapshot, interaction_partner

log = logging.getLogger(__name__)

__all__ = [
    "CostWeights",
    "CostBreakdown",
    "Belief",
    "GameMatrix",
    "safety_cost",
    "efficiency_cost",
    "comfort_cost",
    "navigation_cost",
    "vehicle_cost",
    "build_game",
    "build_game_from_batch",
    "update_belief",
]


@dataclass(frozen=True)
class CostWeights:
    w_saf1: float = 1000.0  # near-collision penalty per step, d < d_lo
    w_saf2: float = 25.0    # close-distance penalty per step, d_lo <= d <= d_hi
    d_lo: float = 1.0
    d_hi: float = 3.0
    w_eff: float = 0.2
    w_com: float = 0.05
    w_nav: float = 0.5
    w_info: float = 0.0

    def __post_init__(self):
        if not self.w_saf1 > self.w_saf2 > 0.0:
            raise ValueError("requires w_saf1 > w_saf2 > 0")
        if not 0.0 <= self.d_lo < self.d_hi:
            raise ValueError("requires 0 <= d_lo < d_hi")
        if min(self.w_eff, self.w_com, self.w_nav) < 0.0:
            raise ValueError("cost weights must be >= 0")


@dataclass(frozen=True)
class CostBreakdown:
    safety: float
    efficiency: float
    comfort: float
    navigation: float
    info: float = 0.0

    @property
    def total(self) -> float:
        return self.safety + self.efficiency + self.comfort + self.navigation + self.info


@dataclass(frozen=True)
class Belief:
    """Probability the interacting vehicle asserts vs yields; sums to one."""

    p_assert: float
    p_yield: float

    def __post_init__(self):
        if not (0.0 <= self.p_assert <= 1.0 and 0.0 <= self.p_yield <= 1.0):
            raise ValueError("belief entries must lie in [0, 1]")
        if abs(self.p_assert + self.p_yield - 1.0) > 1e-9:
            raise ValueError("belief entries must sum to 1")

    @classmethod
    def uniform(cls) -> "Belief":
        return cls(0.5, 0.5)

    def of(self, action: SvAction) -> float:
        return self.p_assert if action == SvAction.ASSERT else self.p_yield

    def entropy(self) -> float:
        h = 0.0
        for p in (self.p_assert, self.p_yield):
            if p > 0.0:
                h -= p * math.log(p)
        return h


@dataclass
class GameMatrix:
    """Cost pairs (weighted group cost, ego cost) indexed by [group action, ego sequence]."""

    rows: tuple[SvAction, ...]
    cols: tuple
    sv_weighted: np.ndarray  # (R, M)
    ev: np.ndarray           # (R, M)
    sv_raw: np.ndarray | None = None
    col_partners: tuple | None = None

    def __post_init__(self):
        self.sv_weighted = np.asarray(self.sv_weighted, dtype=float)
        self.ev = np.asarray(self.ev, dtype=float)
        shape = (len(self.rows), len(self.cols))
        if self.sv_weighted.shape != shape or self.ev.shape != shape:
            raise ValueError("matrix shape must match the action lists")
        if not (np.isfinite(self.sv_weighted).all() and np.isfinite(self.ev).all()):
            raise ValueError("matrix entries must be finite")

    @property
    def shape(self):
        return self.sv_weighted.shape

    @classmethod
    def from_arrays(cls, sv, ev) -> "GameMatrix":
        sv, ev = np.asarray(sv, float), np.asarray(ev, float)
        rows = tuple(SvAction(r) for r in range(sv.shape[0]))
        return cls(rows, tuple(range(sv.shape[1])), sv, ev)


# --- per-trajectory cost terms ----------------------------------------------

def _pair_band_penalties(states, half_len, half_wid, weights: CostWeights):
    """Per-vehicle safety penalty sums for stacked trajectories.

    states (K, V, S, 4) -> (K, V). Distances farther than d_hi plus the two
    circumradii are culled before any exact rectangle distance is computed.
    """
    K, V, S, _ = states.shape
    radius = np.hypot(half_len, half_wid)
    out = np.zeros((K, V))
    for i in range(V):
        for j in range(i + 1, V):
            dx = states[:, i, :, 0] - states[:, j, :, 0]
            dy = states[:, i, :, 1] - states[:, j, :, 1]
            reach = weights.d_hi + radius[i] + radius[j]
            near = dx * dx + dy * dy <= reach * reach
            if not near.any():
                continue
            ks, ts = np.nonzero(near)
            d = rect_distance_arrays(
                states[ks, i, ts, 0], states[ks, i, ts, 1], states[ks, i, ts, 2],
                half_len[i], half_wid[i],
                states[ks, j, ts, 0], states[ks, j, ts, 1], states[ks, j, ts, 2],
                half_len[j], half_wid[j],
            )
            p = np.where(d < weights.d_lo, weights.w_saf1,
                         np.where(d <= weights.d_hi, weights.w_saf2, 0.0))
            per_k = np.bincount(ks, weights=p, minlength=K)
            out[:, i] += per_k
            out[:, j] += per_k
    return out


def _half_dims(traj: TrajectorySet, world: WorldSnapshot):
    order = [world.index_of(v) for v in traj.vehicle_ids]
    _, lengths, widths, _, _ = world.params_arrays()
    return 0.5 * lengths[order], 0.5 * widths[order]


def safety_cost(traj: TrajectorySet, vehicle_id: str, weights: CostWeights,
                world: WorldSnapshot) -> float:
    """Sum over steps and other vehicles of the piecewise distance penalty."""
    hl, hw = _half_dims(traj, world)
    per_vehicle = _pair_band_penalties(traj.states[None, ...], hl, hw, weights)
    return float(per_vehicle[0, traj.index_of(vehicle_id)])


def efficiency_cost(traj: TrajectorySet, vehicle_id: str, weights: CostWeights,
                    v_des: float) -> float:
    v = traj.states[traj.index_of(vehicle_id), :, 3]
    return float(weights.w_eff * np.sum((v - v_des) ** 2))


def comfort_cost(traj: TrajectorySet, vehicle_id: str, weights: CostWeights) -> float:
    """Squared jerk, approximated by finite differences of the commanded acceleration."""
    a = traj.inputs[traj.index_of(vehicle_id), :, 0]
    return float(weights.w_com * np.sum(np.diff(a) ** 2) / traj.dt ** 2)


def navigation_cost(traj: TrajectorySet, vehicle_id: str, weights: CostWeights,
                    y_des: float) -> float:
    y = traj.states[traj.index_of(vehicle_id), :, 1]
    return float(weights.w_nav * np.sum((y - y_des) ** 2))


def vehicle_cost(traj: TrajectorySet, vehicle_id: str, weights: CostWeights,
                 world: WorldSnapshot, v_des: float, y_des: float,
                 info: float = 0.0) -> CostBreakdown:
    return CostBreakdown(
        safety=safety_cost(traj, vehicle_id, weights, world),
        efficiency=efficiency_cost(traj, vehicle_id, weights, v_des),
        comfort=comfort_cost(traj, vehicle_id, weights),
        navigation=navigation_cost(traj, vehicle_id, weights, y_des),
        info=info,
    )


# --- matrix assembly ----------------------------------------------------------

def _structure_tuples(tuples) -> tuple[tuple[SvAction, ...], tuple[DecisionSequence, ...]]:
    rows = list(dict.fromkeys(sv for sv, _ in tuples))
    n_cols, rem = divmod(len(tuples), len(rows))
    cols = tuple(seq for _, seq in tuples[:n_cols])
    ok = rem == 0 and n_cols > 0
    if ok:
        for r, sv in enumerate(rows):
            block = tuples[r * n_cols:(r + 1) * n_cols]
            if any(s is not sv and s != sv for s, _ in block):
                ok = False
                break
            if any(a is not b and a != b for (_, a), b in zip(block, cols)):
                ok = False
                break
    if not ok:
        raise ValueError("action tuples must form a row-major cross product")
    return tuple(rows), cols


def _column_beliefs(cols, world: WorldSnapshot, beliefs: Mapping[str, Belief]):
    """Belief of each column's interaction partner; uniform when a column has none."""
    gaps = world.resolve_gaps()
    partners = tuple(interaction_partner(seq, gaps) for seq in cols)
    per_col = tuple(
        beliefs.get(p, Belief.uniform()) if p is not None else Belief.uniform()
        for p in partners
    )
    return partners, per_col


def _weight_rows(sv_raw, rows, per_col_beliefs):
    w = np.array([[1.0 - b.of(r) for b in per_col_beliefs] for r in rows])
    return w * sv_raw


def build_game(tuples: Sequence[tuple[SvAction, DecisionSequence]],
               trajectory_sets: Sequence[TrajectorySet],
               beliefs: Mapping[str, Belief],
               weights: CostWeights,
               world: WorldSnapshot,
               y_des_ego: float | None = None) -> GameMatrix:
    """Assemble the belief-weighted cost matrix from per-tuple trajectory sets.

    Entry (i, j) holds ((1 - b(row_i)) * sum of surrounding-vehicle costs, ego cost)
    where the belief is the one tracked for the interaction partner implied by
    column j. Raises when a tuple is missing its trajectory set.
    """
    tuples = list(tuples)
    if len(trajectory_sets) != len(tuples):
        raise ValueError("one trajectory set per action tuple is required")
    for tup, ts in zip(tuples, trajectory_sets):
        if ts.action != tup:
            raise ValueError(f"trajectory set does not match its action tuple: {tup}")
    rows, cols = _structure_tuples(tuples)
    if y_des_ego is None:
        y_des_ego = world.lanes.target_center

    ego = world.ego_id
    sv_ids = [v for v in world.ids if v != ego]
    sv_raw = np.empty((len(rows), len(cols)))
    ev = np.empty((len(rows), len(cols)))
    for k, ts in enumerate(trajectory_sets):
        r, c = divmod(k, len(cols))
        total_sv = 0.0
        for vid in sv_ids:
            total_sv += vehicle_cost(
                ts, vid, weights, world,
                v_des=world.v_des_of(vid),
                y_des=world.lanes.nearest_center(ts.states[ts.index_of(vid), 0, 1]),
            ).total
        sv_raw[r, c] = total_sv
        ev[r, c] = vehicle_cost(ts, ego, weights, world,
                                v_des=world.v_des_of(ego), y_des=y_des_ego).total

    partners, per_col = _column_beliefs(cols, world, beliefs)
    sv_weighted = _weight_rows(sv_raw, rows, per_col)
    return GameMatrix(rows, cols, sv_weighted, ev, sv_raw=sv_raw, col_partners=partners)


def build_game_from_batch(rollout: BatchRollout, world: WorldSnapshot,
                          beliefs: Mapping[str, Belief], weights: CostWeights,
                          y_des_ego: float | None = None,
                          ev_extra: np.ndarray | None = None) -> GameMatrix:
    """Vectorized equivalent of build_game operating on a stacked rollout.

    ev_extra, when given, is added to the ego entries (information-gain term).
    """
    rows, cols = _structure_tuples(rollout.tuples)
    if y_des_ego is None:
        y_des_ego = world.lanes.target_center
    e = world.ego_index
    _, lengths, widths, _, _ = world.params_arrays()

    safety = _pair_band_penalties(rollout.states, 0.5 * lengths, 0.5 * widths, weights)
    v_err = rollout.states[:, :, :, 3] - world.v_des[None, :, None]
    eff = weights.w_eff * np.sum(v_err ** 2, axis=2)
    com = weights.w_com * np.sum(np.diff(rollout.inputs[:, :, :, 0], axis=2) ** 2,
                                 axis=2) / rollout.dt ** 2
    y_des = np.array([world.lanes.nearest_center(float(world.states[k, 1]))
                      for k in range(world.n_vehicles)])
    y_des[e] = y_des_ego
    nav = weights.w_nav * np.sum((rollout.states[:, :, :, 1] - y_des[None, :, None]) ** 2, axis=2)

    total = safety + eff + com + nav
    sv_mask = np.ones(world.n_vehicles, dtype=bool)
    sv_mask[e] = False
    sv_agg = total[:, sv_mask].sum(axis=1)
    ev_flat = total[:, e]
    if ev_extra is not None:
        ev_flat = ev_flat + ev_extra

    shape = (len(rows), len(cols))
    sv_raw = sv_agg.reshape(shape)
    ev = ev_flat.reshape(shape)
    partners, per_col = _column_beliefs(cols, world, beliefs)
    sv_weighted = _weight_rows(sv_raw, rows, per_col)
    return GameMatrix(rows, cols, sv_weighted, ev, sv_raw=sv_raw, col_partners=partners)


# --- belief update -------------------------------------------------------------

def update_belief(prior: Belief, observed: np.ndarray,
                  predicted: Mapping[SvAction, np.ndarray],
                  sigma_a: float = 0.8) -> Belief:
    """Bayes update of the assert/yield belief from an observed acceleration trace.

    The likelihood of each mode is a product of per-step Gaussians centered on
    the mode's predicted acceleration. A numerically vacuous likelihood (all
    modes zero / non-finite) leaves the prior unchanged and is logged.
    """
    observed = np.asarray(observed, dtype=float)
    logliks = []
    for action in (SvAction.ASSERT, SvAction.YIELD):
        pred = np.asarray(predicted[action], dtype=float)
        if pred.shape != observed.shape:
            raise ValueError("observed and predicted traces must cover the same window")
        logliks.append(-0.5 * float(np.sum(((observed - pred) / sigma_a) ** 2)))

    with np.errstate(divide="ignore"):
        log_post = np.array(logliks) + np.log([prior.p_assert, prior.p_yield])
    if not np.any(np.isfinite(log_post)):
        log.warning("belief update skipped: likelihoods vanished for every mode")
        return prior
    log_post = log_post - np.nanmax(log_post[np.isfinite(log_post)])
    post = np.exp(np.where(np.isfinite(log_post), log_post, -np.inf))
    z = post.sum()
    if not np.isfinite(z) or z <= 0.0:
        log.warning("belief update skipped: posterior mass is not normalizable")
        return prior
    post = post / z
    return Belief(float(post[0]), float(post[1]))
