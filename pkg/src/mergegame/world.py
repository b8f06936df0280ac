"""Multi-vehicle snapshot, lane geometry, and gap topology resolution."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .actions import DecisionSequence, GapChoice
from .dynamics import VehicleParams, VehicleState

__all__ = ["LaneGeometry", "GapBounds", "WorldSnapshot", "interaction_partner"]


@dataclass(frozen=True)
class LaneGeometry:
    """Straight two-lane layout: the ego's starting lane plus the merge target to its left."""

    current_center: float = 0.0
    target_center: float = 3.5
    width: float = 3.5
    merge_end: float = 100.0  # longitudinal position where the merge lane runs out

    def __post_init__(self):
        if self.width <= 0.0 or self.merge_end <= 0.0:
            raise ValueError("lane width and merge_end must be > 0")
        if self.target_center == self.current_center:
            raise ValueError("lane centers must differ")

    @property
    def probe_line(self) -> float:
        """Intermediate probing line on the boundary between the two lanes."""
        return 0.5 * (self.current_center + self.target_center)

    def nearest_center(self, y: float) -> float:
        if abs(y - self.current_center) <= abs(y - self.target_center):
            return self.current_center
        return self.target_center


@dataclass(frozen=True)
class GapBounds:
    """Bounding vehicles of one gap; the rear-bounding vehicle is the interaction partner."""

    front_id: str | None
    rear_id: str | None

    @property
    def partner_id(self) -> str | None:
        return self.rear_id


@dataclass
class WorldSnapshot:
    """States of all vehicles at one instant, with per-vehicle parameters and desired speeds."""

    ids: tuple[str, ...]
    states: np.ndarray  # (V, 4) columns x, y, theta, v
    params: tuple[VehicleParams, ...]
    v_des: np.ndarray   # (V,)
    lanes: LaneGeometry
    ego_index: int = 0
    _index: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        self.states = np.asarray(self.states, dtype=float)
        self.v_des = np.asarray(self.v_des, dtype=float)
        if self.states.shape != (len(self.ids), 4):
            raise ValueError("states must have shape (n_vehicles, 4)")
        if len(self.params) != len(self.ids) or self.v_des.shape != (len(self.ids),):
            raise ValueError("ids, states, params and v_des must align")
        if not 0 <= self.ego_index < len(self.ids):
            raise ValueError("ego_index out of range")
        self._index = {vid: k for k, vid in enumerate(self.ids)}

    @property
    def n_vehicles(self) -> int:
        return len(self.ids)

    @property
    def ego_id(self) -> str:
        return self.ids[self.ego_index]

    def index_of(self, vehicle_id: str) -> int:
        return self._index[vehicle_id]

    def state_of(self, vehicle_id: str) -> VehicleState:
        x, y, th, v = self.states[self.index_of(vehicle_id)]
        return VehicleState(float(x), float(y), float(th), float(v))

    def v_des_of(self, vehicle_id: str) -> float:
        return float(self.v_des[self.index_of(vehicle_id)])

    def lane_center_of(self, k: int) -> float:
        return self.lanes.nearest_center(float(self.states[k, 1]))

    def params_arrays(self):
        """Per-vehicle parameter vectors (wheelbase, length, width, a_max, delta_max)."""
        cols = [(p.wheelbase, p.length, p.width, p.a_max, p.delta_max) for p in self.params]
        arr = np.array(cols, dtype=float)
        return arr[:, 0], arr[:, 1], arr[:, 2], arr[:, 3], arr[:, 4]

    def leader_indices(self, include_ego: bool = True) -> np.ndarray:
        """Nearest same-lane vehicle ahead of each vehicle (-1 when the road ahead is free).

        Lane membership is by nearest lane center. With include_ego=False the
        ego is invisible to the chain (the closed-loop truth model handles the
        ego through its own reaction gate instead).
        """
        n = self.n_vehicles
        out = np.full(n, -1, dtype=int)
        centers = [self.lane_center_of(k) for k in range(n)]
        for i in range(n):
            best = -1
            best_dx = np.inf
            for j in range(n):
                if j == i or (not include_ego and j == self.ego_index):
                    continue
                if centers[j] != centers[i]:
                    continue
                dx = self.states[j, 0] - self.states[i, 0]
                if dx > 0.0 and dx < best_dx:
                    best, best_dx = j, dx
            out[i] = best
        return out

    def resolve_gaps(self) -> dict[GapChoice, GapBounds]:
        """Identify the bounding vehicles of the three semantic gaps.

        GAP_0 is the ego's current lane behind its leader. On the target lane,
        GAP_1 is bounded at the rear by the nearest vehicle ahead of the ego
        and GAP_2 by the nearest vehicle behind it, so the rear bound of the
        chosen gap is always the vehicle that would have to open it.
        """
        e = self.ego_index
        x_ego = float(self.states[e, 0])
        ego_lane = self.lane_center_of(e)
        target = self.lanes.target_center

        lead = self.leader_indices()[e]
        gap0 = GapBounds(self.ids[lead] if lead >= 0 else None, None)

        on_target = [k for k in range(self.n_vehicles)
                     if k != e and self.lane_center_of(k) == target]
        ahead = sorted((k for k in on_target if self.states[k, 0] >= x_ego),
                       key=lambda k: self.states[k, 0])
        behind = sorted((k for k in on_target if self.states[k, 0] < x_ego),
                        key=lambda k: -self.states[k, 0])

        def vid(seq, idx):
            return self.ids[seq[idx]] if len(seq) > idx else None

        if ahead:
            gap1 = GapBounds(vid(ahead, 1), vid(ahead, 0))
            gap2 = GapBounds(vid(ahead, 0), vid(behind, 0))
        else:
            gap1 = GapBounds(None, vid(behind, 0))
            gap2 = GapBounds(vid(behind, 0), vid(behind, 1))
        if ego_lane == target:
            # already merged: the current-lane gap and the front target gap coincide
            gap0 = GapBounds(gap0.front_id, None)
        return {GapChoice.GAP_0: gap0, GapChoice.GAP_1: gap1, GapChoice.GAP_2: gap2}


def interaction_partner(seq: DecisionSequence,
                        gaps: dict[GapChoice, GapBounds]) -> str | None:
    """The single surrounding vehicle a decision sequence negotiates with.

    Taken from the last step that targets a lane-change gap: the rear bound of
    that gap is the vehicle that must open it. Sequences that never leave the
    current lane have no partner.
    """
    for step in reversed(tuple(seq)):
        if step.gap != GapChoice.GAP_0:
            return gaps[step.gap].partner_id
    return None
