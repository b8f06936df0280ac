import numpy as np
import pytest

from mergegame.actions import DecisionSequence, EgoDecision, GapChoice, LateralDecision
from mergegame.dynamics import VehicleParams
from mergegame.world import GapBounds, LaneGeometry, WorldSnapshot, interaction_partner

G0, G1, G2 = GapChoice.GAP_0, GapChoice.GAP_1, GapChoice.GAP_2
LK, LC = LateralDecision.LANE_KEEP, LateralDecision.LEFT_CHANGE


def make_world(rows, ego_id="ego"):
    """rows: list of (id, x, y, v)."""
    ids = tuple(r[0] for r in rows)
    states = np.array([[r[1], r[2], 0.0, r[3]] for r in rows])
    return WorldSnapshot(
        ids=ids, states=states,
        params=tuple(VehicleParams() for _ in rows),
        v_des=np.full(len(rows), 10.0),
        lanes=LaneGeometry(),
        ego_index=ids.index(ego_id),
    )


CANONICAL = [
    ("ego", 0.0, 0.0, 8.0),
    ("sv0", 20.0, 0.0, 5.0),   # merge-lane leader
    ("sv1", 8.0, 3.5, 8.0),    # nearest ahead on target lane
    ("sv2", -4.0, 3.5, 8.0),   # nearest behind
    ("sv3", -16.0, 3.5, 8.0),
]


def test_gap_topology_canonical():
    gaps = make_world(CANONICAL).resolve_gaps()
    assert gaps[G0] == GapBounds("sv0", None)
    assert gaps[G1] == GapBounds(None, "sv1")
    assert gaps[G2] == GapBounds("sv1", "sv2")
    assert gaps[G2].partner_id == "sv2"


def test_gap_topology_two_ahead():
    rows = [("ego", 0.0, 0.0, 8.0), ("a", 10.0, 3.5, 8.0), ("b", 25.0, 3.5, 8.0),
            ("c", -9.0, 3.5, 8.0)]
    gaps = make_world(rows).resolve_gaps()
    assert gaps[G1] == GapBounds("b", "a")
    assert gaps[G2] == GapBounds("a", "c")
    assert gaps[G0] == GapBounds(None, None)


def test_gap_topology_nobody_ahead():
    rows = [("ego", 0.0, 0.0, 8.0), ("a", -6.0, 3.5, 8.0), ("b", -20.0, 3.5, 8.0)]
    gaps = make_world(rows).resolve_gaps()
    assert gaps[G1] == GapBounds(None, "a")
    assert gaps[G2] == GapBounds("a", "b")


def test_gap_topology_empty_target_lane():
    rows = [("ego", 0.0, 0.0, 8.0), ("sv0", 15.0, 0.0, 5.0)]
    gaps = make_world(rows).resolve_gaps()
    assert gaps[G1] == GapBounds(None, None)
    assert gaps[G2] == GapBounds(None, None)


def test_merged_ego_follows_target_lane():
    rows = [("ego", 0.0, 3.5, 8.0), ("a", 12.0, 3.5, 8.0), ("b", -10.0, 3.5, 8.0)]
    gaps = make_world(rows).resolve_gaps()
    assert gaps[G0].front_id == "a"


def test_leader_indices():
    w = make_world(CANONICAL)
    leaders = w.leader_indices()
    ids = list(w.ids)
    assert leaders[ids.index("ego")] == ids.index("sv0")
    assert leaders[ids.index("sv2")] == ids.index("sv1")
    assert leaders[ids.index("sv3")] == ids.index("sv2")
    assert leaders[ids.index("sv1")] == -1
    assert leaders[ids.index("sv0")] == -1


def test_leader_indices_can_exclude_ego():
    rows = [("ego", 5.0, 0.0, 8.0), ("rear", -10.0, 0.0, 8.0), ("front", 30.0, 0.0, 8.0)]
    w = make_world(rows)
    with_ego = w.leader_indices(include_ego=True)
    without = w.leader_indices(include_ego=False)
    assert with_ego[1] == 0       # rear vehicle follows the ego
    assert without[1] == 2        # or the front vehicle when the ego is invisible


def test_interaction_partner_last_gap_rule():
    gaps = make_world(CANONICAL).resolve_gaps()
    seq = DecisionSequence((EgoDecision(G1, LK), EgoDecision(G2, LC), EgoDecision(G2, LC)))
    assert interaction_partner(seq, gaps) == "sv2"
    seq2 = DecisionSequence((EgoDecision(G2, LC), EgoDecision(G1, LC), EgoDecision(G0, LK)))
    assert interaction_partner(seq2, gaps) == "sv1"
    seq3 = DecisionSequence((EgoDecision(G0, LK),) * 3)
    assert interaction_partner(seq3, gaps) is None


def test_probe_line_between_centers():
    lanes = LaneGeometry(current_center=0.0, target_center=3.5, width=3.5)
    assert lanes.probe_line == pytest.approx(1.75)
    assert lanes.nearest_center(1.0) == 0.0
    assert lanes.nearest_center(2.0) == 3.5


def test_world_validation():
    with pytest.raises(ValueError):
        WorldSnapshot(ids=("a",), states=np.zeros((2, 4)),
                      params=(VehicleParams(),), v_des=np.zeros(1), lanes=LaneGeometry())
