import pytest

from mergegame.scenario import (
    ScenarioConfig,
    VehicleSpec,
    default_merge_scenario,
    empty_lane_scenario,
    load_scenario,
    packed_lane_scenario,
    save_scenario,
)


def test_yaml_roundtrip(tmp_path):
    cfg = default_merge_scenario(traffic_speed=10.0, planner="lowest-cost", seed=99)
    path = tmp_path / "scenario.yaml"
    save_scenario(cfg, path)
    loaded = load_scenario(path)
    assert loaded == cfg


def test_initial_world_layout():
    cfg = default_merge_scenario(5.0)
    world = cfg.initial_world()
    assert world.ego_id == "ego"
    assert world.n_vehicles == 5
    e = world.ego_index
    assert world.states[e, 1] == cfg.lanes.current_center
    sv1 = world.index_of("sv1")
    assert world.states[sv1, 1] == cfg.lanes.target_center


def test_validation_errors():
    ego = VehicleSpec("ego", role="ego")
    with pytest.raises(ValueError):
        ScenarioConfig(vehicles=[ego])  # no surrounding vehicle
    with pytest.raises(ValueError):
        ScenarioConfig(vehicles=[ego, VehicleSpec("ego")])  # duplicate id
    with pytest.raises(ValueError):
        ScenarioConfig(vehicles=[VehicleSpec("a"), VehicleSpec("b")])  # no ego
    with pytest.raises(ValueError):
        ScenarioConfig(vehicles=[ego, VehicleSpec("sv")], planner="magic")


def test_builders_are_valid():
    for cfg in (default_merge_scenario(5.0), default_merge_scenario(10.0),
                empty_lane_scenario(), packed_lane_scenario()):
        world = cfg.initial_world()
        assert world.n_vehicles >= 2
    packed = packed_lane_scenario()
    lane_xs = sorted(v.x for v in packed.vehicles if v.lane == "target")
    length = packed.vehicles[2].params.length
    # bumper-to-bumper column spanning the whole merge runway
    assert lane_xs[0] < -30.0 and lane_xs[-1] > 100.0
    for a, b in zip(lane_xs, lane_xs[1:]):
        assert b - a == pytest.approx(length)


def test_truth_mode_variants():
    polite = default_merge_scenario(6.0, truth_modes="polite")
    selfish = default_merge_scenario(6.0, truth_modes="selfish")
    assert all(v.mode == "polite" for v in polite.vehicles if v.role != "ego")
    assert all(v.mode == "selfish" for v in selfish.vehicles if v.role != "ego")
