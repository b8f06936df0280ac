"""Scenario configuration: vehicle roster, lane layout, planner settings, YAML I/O."""

from __future__ import annotations

from dataclasses import asdict, dataclass, field

import numpy as np
import yaml

from .control import IdmSettings, PdGains, PurePursuitParams
from .costs import CostWeights
from .dynamics import VehicleParams
from .forward_sim import PlannerModel, SimConfig
from .world import LaneGeometry, WorldSnapshot

__all__ = [
    "VehicleSpec",
    "BeliefSettings",
    "PruneSettings",
    "EpisodeSettings",
    "MonteCarloSettings",
    "ScenarioConfig",
    "load_scenario",
    "save_scenario",
    "default_merge_scenario",
    "empty_lane_scenario",
    "packed_lane_scenario",
]

PLANNER_KINDS = ("nash", "stackelberg-ev", "lowest-cost")


@dataclass
class VehicleSpec:
    vehicle_id: str
    role: str = "traffic"        # "ego" or "traffic"
    lane: str = "current"        # "current" or "target"
    x: float = 0.0
    y: float | None = None       # defaults to the lane center
    theta: float = 0.0
    v: float = 0.0
    v_des: float = 10.0
    mode: str = "selfish"        # truth behavior: "polite" or "selfish"
    params: VehicleParams = field(default_factory=VehicleParams)


@dataclass
class BeliefSettings:
    initial_assert: float = 0.5
    sigma_accel: float = 0.8


@dataclass
class PruneSettings:
    max_decision_changes: int = 2
    use_default_forbidden: bool = True


@dataclass
class EpisodeSettings:
    max_cycles: int = 60
    success_lateral_tol: float = 0.5
    success_heading_tol: float = 0.05
    speed_jitter: float = 0.5          # uniform +- on initial speeds, per episode seed
    polite_lateral_frac: float = 0.75  # reaction threshold as a fraction of lane width
    selfish_lateral_frac: float = 0.25


@dataclass
class MonteCarloSettings:
    mode: str = "open-loop"   # "open-loop" or "closed-loop"
    n: int = 500
    position_jitter: float = 10.0
    speed_jitter: float = 5.0


@dataclass
class ScenarioConfig:
    lanes: LaneGeometry = field(default_factory=LaneGeometry)
    vehicles: list[VehicleSpec] = field(default_factory=list)
    sim: SimConfig = field(default_factory=SimConfig)
    weights: CostWeights = field(default_factory=CostWeights)
    idm: IdmSettings = field(default_factory=IdmSettings)
    gains: PdGains = field(default_factory=PdGains)
    pursuit: PurePursuitParams = field(default_factory=PurePursuitParams)
    d_safe: float = 6.0
    follow_distance: float = 12.0
    beliefs: BeliefSettings = field(default_factory=BeliefSettings)
    prune: PruneSettings = field(default_factory=PruneSettings)
    episode: EpisodeSettings = field(default_factory=EpisodeSettings)
    montecarlo: MonteCarloSettings = field(default_factory=MonteCarloSettings)
    planner: str = "nash"
    seed: int = 0

    def __post_init__(self):
        if self.planner not in PLANNER_KINDS:
            raise ValueError(f"planner must be one of {PLANNER_KINDS}")
        roles = [v.role for v in self.vehicles]
        if roles.count("ego") != 1:
            raise ValueError("exactly one vehicle must have role 'ego'")
        if len(self.vehicles) < 2:
            raise ValueError("need the ego plus at least one surrounding vehicle")
        ids = [v.vehicle_id for v in self.vehicles]
        if len(set(ids)) != len(ids):
            raise ValueError("vehicle ids must be unique")

    @property
    def ego(self) -> VehicleSpec:
        return next(v for v in self.vehicles if v.role == "ego")

    @property
    def sv_ids(self) -> list[str]:
        return [v.vehicle_id for v in self.vehicles if v.role != "ego"]

    def lane_center(self, lane: str) -> float:
        return self.lanes.current_center if lane == "current" else self.lanes.target_center

    def initial_world(self) -> WorldSnapshot:
        states = np.array([
            [v.x, v.y if v.y is not None else self.lane_center(v.lane), v.theta, v.v]
            for v in self.vehicles
        ])
        return WorldSnapshot(
            ids=tuple(v.vehicle_id for v in self.vehicles),
            states=states,
            params=tuple(v.params for v in self.vehicles),
            v_des=np.array([v.v_des for v in self.vehicles]),
            lanes=self.lanes,
            ego_index=[v.role for v in self.vehicles].index("ego"),
        )

    def planner_model(self) -> PlannerModel:
        return PlannerModel(gains=self.gains, pursuit=self.pursuit, idm=self.idm,
                            d_safe=self.d_safe, follow_distance=self.follow_distance)


# --- YAML serialization -------------------------------------------------------

def _to_dict(cfg: ScenarioConfig) -> dict:
    d = asdict(cfg)
    d["lanes"] = asdict(cfg.lanes)
    return d


def save_scenario(cfg: ScenarioConfig, path) -> None:
    with open(path, "w") as fh:
        yaml.safe_dump(_to_dict(cfg), fh, sort_keys=False)


def _build(cls, data: dict):
    return cls(**data) if data else cls()


def from_dict(data: dict) -> ScenarioConfig:
    vehicles = []
    for vd in data.get("vehicles", []):
        vd = dict(vd)
        vd["params"] = _build(VehicleParams, vd.get("params", {}))
        vehicles.append(VehicleSpec(**vd))
    return ScenarioConfig(
        lanes=_build(LaneGeometry, data.get("lanes", {})),
        vehicles=vehicles,
        sim=_build(SimConfig, data.get("sim", {})),
        weights=_build(CostWeights, data.get("weights", {})),
        idm=_build(IdmSettings, data.get("idm", {})),
        gains=_build(PdGains, data.get("gains", {})),
        pursuit=_build(PurePursuitParams, data.get("pursuit", {})),
        d_safe=data.get("d_safe", 6.0),
        follow_distance=data.get("follow_distance", 12.0),
        beliefs=_build(BeliefSettings, data.get("beliefs", {})),
        prune=_build(PruneSettings, data.get("prune", {})),
        episode=_build(EpisodeSettings, data.get("episode", {})),
        montecarlo=_build(MonteCarloSettings, data.get("montecarlo", {})),
        planner=data.get("planner", "nash"),
        seed=data.get("seed", 0),
    )


def load_scenario(path) -> ScenarioConfig:
    with open(path) as fh:
        return from_dict(yaml.safe_load(fh))


# --- canonical scenarios --------------------------------------------------------

def equilibrium_gap(v: float, idm: IdmSettings, v0: float) -> float:
    """Spacing at which the IDM holds speed v exactly against an equal-speed leader."""
    s_star = idm.s0 + v * idm.time_headway
    return s_star / np.sqrt(1.0 - (v / v0) ** 4)


def default_merge_scenario(traffic_speed: float = 5.0, planner: str = "nash",
                           seed: int = 0, stream_gap: float | None = None,
                           truth_modes: str = "mixed") -> ScenarioConfig:
    """Merge-lane scenario: a slower truck ahead of the ego on the merge lane
    and a three-vehicle stream on the target lane, with the middle gap opening
    right behind the ego.

    stream_gap is the center-to-center spacing of the stream (default scales
    mildly with speed and is tight enough that merging requires either a
    squeeze or a negotiation). truth_modes: "mixed" (polite truck, selfish
    target lane), "polite", or "selfish" for every surrounding vehicle.
    """
    idm = IdmSettings()
    if stream_gap is None:
        stream_gap = 10.0 + 0.2 * traffic_speed
    v_des_traffic = 1.2 * traffic_speed
    mode_truck = "polite" if truth_modes in ("mixed", "polite") else "selfish"
    mode_lane = "selfish" if truth_modes in ("mixed", "selfish") else "polite"
    truck_v = 0.75 * traffic_speed
    vehicles = [
        VehicleSpec("ego", role="ego", lane="current", x=0.0, v=traffic_speed,
                    v_des=traffic_speed + 2.0),
        VehicleSpec("sv0", lane="current", x=20.0, v=truck_v, v_des=truck_v,
                    mode=mode_truck, params=VehicleParams(length=7.0)),
        VehicleSpec("sv1", lane="target", x=stream_gap - 4.0, v=traffic_speed,
                    v_des=v_des_traffic, mode=mode_lane),
        VehicleSpec("sv2", lane="target", x=-4.0, v=traffic_speed,
                    v_des=v_des_traffic, mode=mode_lane),
        VehicleSpec("sv3", lane="target", x=-4.0 - stream_gap, v=traffic_speed,
                    v_des=v_des_traffic, mode=mode_lane),
    ]
    return ScenarioConfig(vehicles=vehicles, idm=idm, planner=planner, seed=seed)


def empty_lane_scenario(speed: float = 8.0, seed: int = 0) -> ScenarioConfig:
    """Unobstructed merge: the target lane is free ahead, with only a distant
    trailing vehicle far behind the ego."""
    vehicles = [
        VehicleSpec("ego", role="ego", lane="current", x=0.0, v=speed, v_des=speed + 2.0),
        VehicleSpec("trail", lane="target", x=-80.0, v=speed, v_des=speed),
    ]
    return ScenarioConfig(vehicles=vehicles, seed=seed)


def packed_lane_scenario(speed: float = 6.0, seed: int = 0) -> ScenarioConfig:
    """Target lane bumper-to-bumper over the whole merge length; no gap exists."""
    vehicles = [
        VehicleSpec("ego", role="ego", lane="current", x=0.0, v=speed, v_des=speed + 4.0),
        VehicleSpec("sv0", lane="current", x=30.0, v=0.5 * speed, v_des=0.5 * speed,
                    mode="polite", params=VehicleParams(length=7.0)),
    ]
    length = VehicleParams().length
    n = 0
    x = 115.0
    while x > -40.0:
        vehicles.append(VehicleSpec(f"pack{n}", lane="target", x=x, v=speed,
                                    v_des=speed, mode="selfish"))
        x -= length  # touching bumpers
        n += 1
    return ScenarioConfig(vehicles=vehicles, seed=seed)
