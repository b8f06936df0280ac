"""Multi-vehicle forward simulation of action tuples over the planning horizon.

All action tuples of one planning cycle are rolled out simultaneously on
stacked numpy arrays: the ego follows its decision sequence through the gap
reference / PD / pure-pursuit stack, surrounding vehicles follow the modified
IDM with zero heading and steering, and the tuple's group action sets the
interaction partner's willingness to yield.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .actions import DecisionSequence, LateralDecision, SvAction
from .control import IdmSettings, PdGains, PurePursuitParams
from .dynamics import ControlInput, VehicleState, rect_overlap_arrays, step_bicycle_arrays
from .world import WorldSnapshot, interaction_partner

__all__ = [
    "SimConfig",
    "PlannerModel",
    "TrajectorySet",
    "BatchRollout",
    "active_decision_index",
    "simulate_tuple",
    "simulate_batch",
]


@dataclass(frozen=True)
class SimConfig:
    """Horizon discretization: steps * dt of trajectory time split into
    horizon decision slots of decision_period each."""

    steps: int = 25
    dt: float = 0.2
    horizon: int = 5
    decision_period: float = 1.0

    def __post_init__(self):
        if self.steps < 1 or self.horizon < 1 or self.dt <= 0.0 or self.decision_period <= 0.0:
            raise ValueError("SimConfig fields must be positive")
        ratio = self.decision_period / self.dt
        if abs(ratio - round(ratio)) > 1e-9 or round(ratio) < 1:
            raise ValueError("decision_period must be a positive integer multiple of dt")
        if abs(self.horizon * self.decision_period - self.steps * self.dt) > 1e-9:
            raise ValueError("decision sequence must span the trajectory horizon exactly")

    @property
    def substeps(self) -> int:
        return int(round(self.decision_period / self.dt))


@dataclass(frozen=True)
class PlannerModel:
    """Controller and car-following settings the planner assumes during rollouts."""

    gains: PdGains = field(default_factory=PdGains)
    pursuit: PurePursuitParams = field(default_factory=PurePursuitParams)
    idm: IdmSettings = field(default_factory=IdmSettings)
    d_safe: float = 6.0
    follow_distance: float = 12.0
    keep_engage_time: float = 0.8  # time headroom before the keep-lane governor engages


def active_decision_index(step: int, cfg: SimConfig) -> int:
    """Decision slot governing trajectory step `step` (floor of t*dt/decision_period)."""
    return min(step // cfg.substeps, cfg.horizon - 1)


@dataclass
class TrajectorySet:
    """Simulated state/input histories of all vehicles under one action tuple."""

    vehicle_ids: tuple[str, ...]
    states: np.ndarray  # (V, T+1, 4) columns x, y, theta, v
    inputs: np.ndarray  # (V, T, 2) columns a, delta (already saturated)
    action: tuple[SvAction, DecisionSequence]
    dt: float
    feasible: bool
    partner_id: str | None = None

    @property
    def n_steps(self) -> int:
        return self.inputs.shape[1]

    def index_of(self, vehicle_id: str) -> int:
        return self.vehicle_ids.index(vehicle_id)

    def state(self, vehicle_id: str, t: int) -> VehicleState:
        x, y, th, v = self.states[self.index_of(vehicle_id), t]
        return VehicleState(float(x), float(y), float(th), float(v))

    def input(self, vehicle_id: str, t: int) -> ControlInput:
        a, d = self.inputs[self.index_of(vehicle_id), t]
        return ControlInput(float(a), float(d))


@dataclass
class BatchRollout:
    """Rollouts of many action tuples stacked along the first axis."""

    tuples: list[tuple[SvAction, DecisionSequence]]
    vehicle_ids: tuple[str, ...]
    states: np.ndarray  # (K, V, T+1, 4)
    inputs: np.ndarray  # (K, V, T, 2)
    lengths: np.ndarray
    widths: np.ndarray
    partner_ids: tuple[str | None, ...]
    dt: float
    _feasible: np.ndarray | None = None

    def __len__(self):
        return len(self.tuples)

    @property
    def feasible(self) -> np.ndarray:
        """Collision-free flags, computed on first use (the planner scores
        collisions through the safety cost instead)."""
        if self._feasible is None:
            self._feasible = _no_overlap_flags(self.states, self.lengths, self.widths)
        return self._feasible

    def to_trajectory_set(self, k: int) -> TrajectorySet:
        return TrajectorySet(self.vehicle_ids, self.states[k].copy(), self.inputs[k].copy(),
                             self.tuples[k], self.dt, bool(self.feasible[k]),
                             self.partner_ids[k])


def _no_overlap_flags(states, lengths, widths):
    """True per rollout when no two footprints intersect at any step."""
    K, V = states.shape[0], states.shape[1]
    radius = 0.5 * np.hypot(lengths, widths)
    collided = np.zeros(K, dtype=bool)
    for i in range(V):
        for j in range(i + 1, V):
            dx = states[:, i, :, 0] - states[:, j, :, 0]
            dy = states[:, i, :, 1] - states[:, j, :, 1]
            near = dx * dx + dy * dy <= (radius[i] + radius[j]) ** 2
            if not near.any():
                continue
            ks, ts = np.nonzero(near)
            hit = rect_overlap_arrays(
                states[ks, i, ts, 0], states[ks, i, ts, 1], states[ks, i, ts, 2],
                0.5 * lengths[i], 0.5 * widths[i],
                states[ks, j, ts, 0], states[ks, j, ts, 1], states[ks, j, ts, 2],
                0.5 * lengths[j], 0.5 * widths[j],
            )
            if hit.any():
                collided |= np.bincount(ks[hit], minlength=K) > 0
    return ~collided


def simulate_batch(world: WorldSnapshot, tuples, cfg: SimConfig,
                   model: PlannerModel) -> BatchRollout:
    """Roll out every action tuple from the shared initial world state.

    Deterministic: no randomness enters the rollouts, and identical inputs
    produce identical arrays. Collisions never abort a rollout; they only
    clear its feasibility flag (the evaluator penalizes them).
    """
    tuples = list(tuples)
    if not tuples:
        raise ValueError("need at least one action tuple")
    K, V, T = len(tuples), world.n_vehicles, cfg.steps
    e = world.ego_index
    for _, seq in tuples:
        if len(seq) != cfg.horizon:
            raise ValueError("decision sequence length must equal the decision horizon")

    gaps_map = world.resolve_gaps()
    partner_ids = tuple(interaction_partner(seq, gaps_map) for _, seq in tuples)
    partner_idx = np.array([world.index_of(p) if p is not None else -1 for p in partner_ids])
    sv_is_yield = np.array([sv == SvAction.YIELD for sv, _ in tuples])

    gap_seq = np.array([[int(s.gap) for s in seq] for _, seq in tuples])       # (K, H)
    lat_seq = np.array([[int(s.lateral) for s in seq] for _, seq in tuples])   # (K, H)

    wheelbase, lengths, widths, a_max, delta_max = world.params_arrays()
    v_des = world.v_des
    lanes = world.lanes
    w_lane = lanes.width
    idm = model.idm
    kappa_assert = 2.0 * np.log(idm.beta_assert) / w_lane
    kappa_yield = 2.0 * np.log(idm.beta_yield) / w_lane
    sqrt_ab = 2.0 * np.sqrt(idm.a_acc * idm.b_dec)

    # gap bounds and leader chain resolved once per cycle; positions stay live
    front_by_gap = np.array([
        world.index_of(gaps_map[g].front_id) if gaps_map[g].front_id is not None else -1
        for g in sorted(gaps_map)])
    rear_by_gap = np.array([
        world.index_of(gaps_map[g].rear_id) if gaps_map[g].rear_id is not None else -1
        for g in sorted(gaps_map)])
    leader_idx = world.leader_indices(include_ego=True)

    ego_lane_center = lanes.nearest_center(float(world.states[e, 1]))
    # indexed by LateralDecision value: LANE_KEEP, LEFT_CHANGE, LEFT_PROBE
    line_by_lat = np.array([ego_lane_center, lanes.target_center, lanes.probe_line])
    lead_cur = leader_idx[e]

    states = np.empty((K, V, T + 1, 4))
    inputs = np.empty((K, V, T, 2))
    X = np.tile(world.states[:, 0], (K, 1))
    Y = np.tile(world.states[:, 1], (K, 1))
    TH = np.tile(world.states[:, 2], (K, 1))
    VS = np.tile(world.states[:, 3], (K, 1))
    rows = np.arange(K)
    sv_indices = [i for i in range(V) if i != e]

    for t in range(T):
        states[:, :, t, 0], states[:, :, t, 1] = X, Y
        states[:, :, t, 2], states[:, :, t, 3] = TH, VS

        d = t // cfg.substeps
        gap_t = gap_seq[:, d]
        lat_t = lat_seq[:, d]

        # --- ego lateral: pure pursuit onto the decision's target line
        lookahead = np.maximum(model.pursuit.kpp * VS[:, e], model.pursuit.min_lookahead)
        sin_los = np.clip((line_by_lat[lat_t] - Y[:, e]) / lookahead, -1.0, 1.0)
        gamma = np.arcsin(sin_los) - TH[:, e]
        delta_e = np.clip(np.arctan(2.0 * wheelbase[e] * np.sin(gamma) / lookahead),
                          -delta_max[e], delta_max[e])

        # --- ego longitudinal: PD on the rule-based gap reference
        fi = front_by_gap[gap_t]
        ri = rear_by_gap[gap_t]
        has_f, has_r = fi >= 0, ri >= 0
        xf = X[rows, np.where(has_f, fi, 0)]
        vf = VS[rows, np.where(has_f, fi, 0)]
        xr = X[rows, np.where(has_r, ri, 0)]
        v_tgt = np.where(has_f, np.minimum(vf, v_des[e]), v_des[e])
        x_tgt = np.where(has_r & has_f,
                         0.5 * ((xr + model.d_safe) + (xf - model.d_safe)),
                         xf - model.follow_distance)
        a_pd = model.gains.kp_pos * (x_tgt - X[:, e]) + model.gains.kd_pos * (v_tgt - VS[:, e])
        a_free = model.gains.kp_vel * (v_des[e] - VS[:, e])
        a_e = np.where(has_f, a_pd, a_free)

        # until the ego has mostly crossed, its command may not drive it into
        # the leader of the lane it is still occupying; the governor engages
        # once that leader is within the follow point plus a time headroom
        if lead_cur >= 0:
            still_on_lane = np.abs(lanes.target_center - Y[:, e]) > 0.25 * w_lane
            slack = X[:, lead_cur] - X[:, e] - model.follow_distance
            engaged = still_on_lane & \
                (slack <= model.keep_engage_time * np.maximum(VS[:, e], 1.0))
            a_keep = model.gains.kp_pos * (X[:, lead_cur] - model.follow_distance - X[:, e]) \
                + model.gains.kd_pos * (np.minimum(VS[:, lead_cur], v_des[e]) - VS[:, e])
            a_e = np.where(engaged, np.minimum(a_e, a_keep), a_e)
        a_e = np.clip(a_e, -a_max[e], a_max[e])

        A = np.empty((K, V))
        D = np.zeros((K, V))
        A[:, e] = a_e
        D[:, e] = delta_e

        # --- surrounding vehicles: modified IDM, partner beta set by the group action
        ego_probing = (lat_t == int(LateralDecision.LEFT_CHANGE)) | \
                      (lat_t == int(LateralDecision.LEFT_PROBE))
        v_ego_long = VS[:, e] * np.cos(TH[:, e])
        for i in sv_indices:
            v = VS[:, i]
            kappa = np.where(sv_is_yield & (partner_idx == i), kappa_yield, kappa_assert)

            li = leader_idx[i]
            if li >= 0:
                d_phys = np.abs(X[:, li] - X[:, i]) * np.exp(kappa * np.abs(Y[:, li] - Y[:, i]))
                v_phys = VS[:, li]
                has_phys = np.ones(K, dtype=bool)
            else:
                d_phys = np.full(K, np.inf)
                v_phys = np.zeros(K)
                has_phys = np.zeros(K, dtype=bool)

            cand = (partner_idx == i) & ego_probing & (X[:, e] >= X[:, i])
            d_ego = np.abs(X[:, e] - X[:, i]) * np.exp(kappa * np.abs(Y[:, e] - Y[:, i]))
            use_ego = cand & (d_ego < d_phys)

            d_lead = np.where(use_ego, d_ego, d_phys)
            v_lead = np.where(use_ego, v_ego_long, v_phys)
            has_lead = has_phys | use_ego

            free = 1.0 - (v / v_des[i]) ** 4
            safe_d = np.where(d_lead > 0.0, d_lead, 1.0)
            s_star = idm.s0 + v * idm.time_headway + v * (v - v_lead) / sqrt_ab
            a_follow = idm.a_acc * (free - (s_star / safe_d) ** 2)
            a_i = np.where(has_lead, a_follow, idm.a_acc * free)
            a_i = np.where(has_lead & (d_lead <= 0.0), -idm.b_emergency, a_i)
            A[:, i] = np.clip(np.clip(a_i, -idm.b_emergency, idm.a_acc), -a_max[i], a_max[i])

        inputs[:, :, t, 0], inputs[:, :, t, 1] = A, D
        X, Y, TH, VS = step_bicycle_arrays(X, Y, TH, VS, A, D, cfg.dt, wheelbase[None, :])

    states[:, :, T, 0], states[:, :, T, 1] = X, Y
    states[:, :, T, 2], states[:, :, T, 3] = TH, VS

    return BatchRollout(tuples, world.ids, states, inputs, lengths, widths,
                        partner_ids, cfg.dt)


def simulate_tuple(world: WorldSnapshot, action: tuple[SvAction, DecisionSequence],
                   cfg: SimConfig, model: PlannerModel) -> TrajectorySet:
    """Roll out a single action tuple (same engine as the batched planner path)."""
    return simulate_batch(world, [action], cfg, model).to_trajectory_set(0)
