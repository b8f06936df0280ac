"""Game-theoretic lane-merge behavior planning and closed-loop traffic simulation."""

from .actions import (
    DecisionSequence,
    EgoDecision,
    GapChoice,
    LateralDecision,
    PruneRules,
    SvAction,
    build_action_tuples,
    enumerate_ego_sequences,
    lateral_decision_set,
)
from .closed_loop import (
    BehaviorMode,
    EpisodeTrace,
    Outcome,
    run_episode,
    run_episode_batch,
    run_monte_carlo,
    truth_sv_accel,
    write_trace_csv,
)
from .control import (
    GapReference,
    IdmParams,
    IdmSettings,
    PdGains,
    PurePursuitParams,
    gap_reference,
    idm_accel,
    pd_longitudinal,
    pure_pursuit,
    virtual_gap_distance,
)
from .costs import (
    Belief,
    CostBreakdown,
    CostWeights,
    GameMatrix,
    build_game,
    comfort_cost,
    efficiency_cost,
    navigation_cost,
    safety_cost,
    update_belief,
    vehicle_cost,
)
from .dynamics import (
    ControlInput,
    FootprintRect,
    VehicleParams,
    VehicleState,
    footprint_of,
    rect_distance,
    step_bicycle,
)
from .forward_sim import SimConfig, PlannerModel, TrajectorySet, simulate_batch, simulate_tuple
from .game import (
    Equilibrium,
    EquilibriumKind,
    Player,
    Selection,
    check_prop1_assumptions,
    find_pure_nash,
    select_action,
    stackelberg,
)
from .planner import CycleResult, plan_cycle
from .scenario import (
    ScenarioConfig,
    VehicleSpec,
    default_merge_scenario,
    empty_lane_scenario,
    load_scenario,
    packed_lane_scenario,
    save_scenario,
)
from .world import GapBounds, LaneGeometry, WorldSnapshot, interaction_partner

__version__ = "0.1.0"
