"""Receding-horizon closed loop against a surrounding-vehicle truth model,
plus the open-loop equilibrium statistics protocol and planner-comparison batches.

The truth model differs from the planner's rollout model on purpose: real
surrounding vehicles anticipate the ego with a constant-velocity projection and
react only once it comes laterally close, with the reaction range set by their
behavior mode (polite vehicles react to a probing ego, selfish ones only once
it is nearly on their lane).
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from enum import Enum

import numpy as np

from .actions import EgoDecision, GapChoice, LateralDecision
from .control import IdmParams, idm_accel
from .costs import Belief, GameMatrix, update_belief
from .dynamics import ControlInput, VehicleState, rect_overlap_arrays, step_bicycle
from .planner import CycleResult, plan_cycle
from .scenario import ScenarioConfig
from .world import WorldSnapshot

__all__ = [
    "BehaviorMode",
    "Outcome",
    "CycleRecord",
    "EpisodeTrace",
    "EpisodeSummary",
    "MonteCarloStats",
    "truth_sv_accel",
    "run_episode",
    "run_episode_batch",
    "aggregate_episodes",
    "run_monte_carlo",
    "write_trace_csv",
]


class BehaviorMode(Enum):
    POLITE = "polite"
    SELFISH = "selfish"


class Outcome(Enum):
    SUCCESS = "success"
    COLLISION = "collision"
    TIMEOUT = "timeout"


def truth_sv_accel(sv: VehicleState, ego: VehicleState, mode: BehaviorMode,
                   params: IdmParams, lane_center_y: float,
                   leader: VehicleState | None = None,
                   polite_frac: float = 0.75, selfish_frac: float = 0.25) -> float:
    """Ground-truth acceleration of one surrounding vehicle.

    Plain car following against the physical leader; when the ego is ahead and
    laterally within the mode's reaction range of this vehicle's lane center,
    the vehicle also brakes for the ego's constant-velocity projection onto its
    lane and the more cautious of the two commands wins.
    """
    frac = polite_frac if mode == BehaviorMode.POLITE else selfish_frac
    a = idm_accel(sv, leader, params)
    if abs(ego.y - lane_center_y) <= frac * params.w_lane and ego.x >= sv.x:
        projected = VehicleState(ego.x, lane_center_y, 0.0, ego.v * math.cos(ego.theta))
        a = min(a, idm_accel(sv, projected, params))
    return a


@dataclass
class CycleRecord:
    cycle: int
    t0: float
    beliefs: dict[str, tuple[float, float]]
    row: int
    col: int
    kind: str
    fallback_used: bool
    social_cost: float
    sequence: str
    partner_id: str | None
    nash_cells: list[tuple[int, int]]
    game: GameMatrix | None = None


@dataclass
class EpisodeTrace:
    outcome: Outcome
    time_to_merge: float | None
    cycles: list[CycleRecord]
    steps: list[tuple]  # (cycle, t, vehicle_id, x, y, theta, v, a, delta)
    seed: int
    planner: str


@dataclass(frozen=True)
class EpisodeSummary:
    outcome: Outcome
    time_to_merge: float | None
    n_cycles: int
    seed: int


def _ego_hits_anyone(states: np.ndarray, world: WorldSnapshot) -> bool:
    e = world.ego_index
    _, lengths, widths, _, _ = world.params_arrays()
    for i in range(world.n_vehicles):
        if i == e:
            continue
        if rect_overlap_arrays(
            states[e, 0], states[e, 1], states[e, 2], 0.5 * lengths[e], 0.5 * widths[e],
            states[i, 0], states[i, 1], states[i, 2], 0.5 * lengths[i], 0.5 * widths[i],
            strict=True,
        ):
            return True
    return False


def run_episode(cfg: ScenarioConfig, planner: str | None = None,
                record_steps: bool = True, record_games: bool = False) -> EpisodeTrace:
    """Plan-execute loop until the ego merges, collides, or runs out of road.

    Each cycle updates the partner belief from the acceleration observed over
    the last execution window, plans over all action tuples, then executes the
    first decision period of the chosen ego trajectory against the truth world.
    Fully deterministic for a fixed config and seed.
    """
    planner = planner if planner is not None else cfg.planner
    rng = np.random.default_rng(cfg.seed)
    base = cfg.initial_world()
    states = base.states.copy()
    jitter = rng.uniform(-cfg.episode.speed_jitter, cfg.episode.speed_jitter, base.n_vehicles)
    states[:, 3] = np.maximum(states[:, 3] + jitter, 0.0)

    ids, e = base.ids, base.ego_index
    dt, substeps = cfg.sim.dt, cfg.sim.substeps
    lanes = cfg.lanes
    modes = {v.vehicle_id: BehaviorMode(v.mode) for v in cfg.vehicles if v.role != "ego"}
    lane_center = {v.vehicle_id: cfg.lane_center(v.lane) for v in cfg.vehicles}
    idm_params = {
        v.vehicle_id: IdmParams(
            v0=v.v_des, time_headway=cfg.idm.time_headway, s0=cfg.idm.s0,
            a_acc=cfg.idm.a_acc, b_dec=cfg.idm.b_dec, beta=1.0,
            w_lane=lanes.width, b_emergency=cfg.idm.b_emergency)
        for v in cfg.vehicles if v.role != "ego"
    }
    beliefs = {vid: Belief(cfg.beliefs.initial_assert, 1.0 - cfg.beliefs.initial_assert)
               for vid in cfg.sv_ids}

    root = EgoDecision(GapChoice.GAP_0, LateralDecision.LANE_KEEP)
    pending = None  # (partner_id, per-mode predictions, observed accels)
    outcome, ttm = Outcome.TIMEOUT, None
    t = 0.0
    cycles: list[CycleRecord] = []
    rows: list[tuple] = []

    for cycle in range(cfg.episode.max_cycles):
        world = WorldSnapshot(ids, states.copy(), base.params, base.v_des, lanes, e)
        if pending is not None:
            pid, preds, observed = pending
            beliefs[pid] = update_belief(beliefs[pid], np.asarray(observed), preds,
                                         cfg.beliefs.sigma_accel)
        res: CycleResult = plan_cycle(world, beliefs, cfg, root, planner)
        cycles.append(CycleRecord(
            cycle=cycle, t0=t,
            beliefs={vid: (b.p_assert, b.p_yield) for vid, b in beliefs.items()},
            row=res.row, col=res.col, kind=res.kind, fallback_used=res.fallback_used,
            social_cost=float(res.game.sv_weighted[res.row, res.col] + res.game.ev[res.row, res.col]),
            sequence=str(res.chosen_sequence), partner_id=res.partner_id,
            nash_cells=[eq.cell() for eq in res.nash_cells],
            game=res.game if record_games else None,
        ))

        ego_inputs = res.ego_inputs(world, substeps)
        preds = res.partner_accel_predictions(world, substeps)
        leader_idx = world.leader_indices(include_ego=False)
        partner_obs: list[float] = []
        terminal = None

        for s in range(substeps):
            a_cmd = np.zeros(len(ids))
            d_cmd = np.zeros(len(ids))
            a_cmd[e], d_cmd[e] = ego_inputs[s]
            ego_state = VehicleState(*states[e])
            for i, vid in enumerate(ids):
                if i == e:
                    continue
                leader = VehicleState(*states[leader_idx[i]]) if leader_idx[i] >= 0 else None
                a_cmd[i] = truth_sv_accel(
                    VehicleState(*states[i]), ego_state, modes[vid], idm_params[vid],
                    lane_center[vid], leader,
                    cfg.episode.polite_lateral_frac, cfg.episode.selfish_lateral_frac)
            if res.partner_id is not None:
                partner_obs.append(float(a_cmd[base.index_of(res.partner_id)]))
            if record_steps:
                for i, vid in enumerate(ids):
                    rows.append((cycle, t, vid, states[i, 0], states[i, 1], states[i, 2],
                                 states[i, 3], a_cmd[i], d_cmd[i]))
            for i in range(len(ids)):
                nxt = step_bicycle(VehicleState(*states[i]), ControlInput(a_cmd[i], d_cmd[i]),
                                   dt, base.params[i])
                states[i] = (nxt.x, nxt.y, nxt.theta, nxt.v)
            t += dt
            if _ego_hits_anyone(states, base):
                terminal = Outcome.COLLISION
                break
            if abs(states[e, 1] - lanes.target_center) <= cfg.episode.success_lateral_tol \
                    and abs(states[e, 2]) <= cfg.episode.success_heading_tol:
                terminal, ttm = Outcome.SUCCESS, t
                break
            if states[e, 0] > lanes.merge_end:
                terminal = Outcome.TIMEOUT
                break

        root = res.chosen_sequence[0]
        if terminal is not None:
            outcome = terminal
            break
        pending = None
        if preds is not None and res.partner_id is not None:
            pending = (res.partner_id, preds, partner_obs)

    return EpisodeTrace(outcome=outcome, time_to_merge=ttm, cycles=cycles, steps=rows,
                        seed=cfg.seed, planner=planner)


# --- batches -------------------------------------------------------------------

def _episode_worker(args) -> EpisodeSummary:
    cfg, seed, planner = args
    trace = run_episode(replace(cfg, seed=seed), planner=planner, record_steps=False)
    return EpisodeSummary(trace.outcome, trace.time_to_merge, len(trace.cycles), seed)


def run_episode_batch(cfg: ScenarioConfig, n: int, planner: str | None = None,
                      base_seed: int | None = None, workers: int = 0) -> list[EpisodeSummary]:
    """n independent episodes with per-episode seeds derived from base_seed."""
    base_seed = cfg.seed if base_seed is None else base_seed
    seeds = [int(s.generate_state(1)[0] % (2 ** 31)) for s in
             np.random.SeedSequence(base_seed).spawn(n)]
    jobs = [(cfg, s, planner) for s in seeds]
    if workers and workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(_episode_worker, jobs, chunksize=max(1, n // (workers * 8))))
    return [_episode_worker(j) for j in jobs]


def aggregate_episodes(summaries: list[EpisodeSummary]) -> dict:
    n = len(summaries)
    succ = [s for s in summaries if s.outcome == Outcome.SUCCESS]
    coll = [s for s in summaries if s.outcome == Outcome.COLLISION]
    out = {
        "episodes": n,
        "success_rate": len(succ) / n,
        "collision_rate": len(coll) / n,
        "timeout_rate": (n - len(succ) - len(coll)) / n,
        "mean_time_to_merge": float(np.mean([s.time_to_merge for s in succ])) if succ else None,
    }
    return out


# --- open-loop Monte Carlo protocol ---------------------------------------------

@dataclass
class MonteCarloStats:
    n: int
    seed: int
    resampled: int
    nash_fraction: float
    selected_matches_se_ev: float
    selected_matches_se_sv: float
    selected_matches_any_se: float
    yield_fraction_ne: float
    yield_fraction_se_ev: float
    yield_fraction_se_sv: float

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "seed": self.seed,
            "resampled": self.resampled,
            "nash_fraction": self.nash_fraction,
            "selected_matches": {
                "se_ev": self.selected_matches_se_ev,
                "se_sv": self.selected_matches_se_sv,
                "any": self.selected_matches_any_se,
            },
            "yield_fraction": {
                "ne": self.yield_fraction_ne,
                "se_ev": self.yield_fraction_se_ev,
                "se_sv": self.yield_fraction_se_sv,
            },
        }


def _mc_instance(args):
    cfg, seed = args
    rng = np.random.default_rng(seed)
    base = cfg.initial_world()
    e = base.ego_index
    resampled = 0
    while True:
        states = base.states.copy()
        states[e, 0] += rng.uniform(-cfg.montecarlo.position_jitter, cfg.montecarlo.position_jitter)
        states[e, 3] = max(0.0, states[e, 3] + rng.uniform(-cfg.montecarlo.speed_jitter,
                                                           cfg.montecarlo.speed_jitter))
        if not _ego_hits_anyone(states, base):
            break
        resampled += 1
    world = WorldSnapshot(base.ids, states, base.params, base.v_des, cfg.lanes, e)
    beliefs = {vid: Belief(cfg.beliefs.initial_assert, 1.0 - cfg.beliefs.initial_assert)
               for vid in cfg.sv_ids}
    root = EgoDecision(GapChoice.GAP_0, LateralDecision.LANE_KEEP)
    res = plan_cycle(world, beliefs, cfg, root, planner="nash")
    has_nash = len(res.nash_cells) > 0
    sel = (res.row, res.col)
    return {
        "resampled": resampled,
        "has_nash": has_nash,
        "selected": sel,
        "se_ev": res.se_ev.cell(),
        "se_sv": res.se_sv.cell(),
    }


def run_monte_carlo(cfg: ScenarioConfig, n: int | None = None,
                    seed: int | None = None, workers: int = 0) -> MonteCarloStats:
    """Open-loop protocol: perturb the ego's initial longitudinal position and
    speed, build one cost matrix per instance, and compare the equilibrium
    concepts. Initial states that overlap are resampled and counted."""
    n = cfg.montecarlo.n if n is None else n
    seed = cfg.seed if seed is None else seed
    seeds = [int(s.generate_state(1)[0] % (2 ** 31)) for s in
             np.random.SeedSequence(seed).spawn(n)]
    jobs = [(cfg, s) for s in seeds]
    if workers and workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_mc_instance, jobs, chunksize=max(1, n // (workers * 8))))
    else:
        results = [_mc_instance(j) for j in jobs]

    with_nash = [r for r in results if r["has_nash"]]
    def frac(pred, pool):
        return sum(1 for r in pool if pred(r)) / len(pool) if pool else 0.0

    return MonteCarloStats(
        n=n, seed=seed,
        resampled=sum(r["resampled"] for r in results),
        nash_fraction=len(with_nash) / n,
        selected_matches_se_ev=frac(lambda r: r["selected"] == r["se_ev"], with_nash),
        selected_matches_se_sv=frac(lambda r: r["selected"] == r["se_sv"], with_nash),
        selected_matches_any_se=frac(
            lambda r: r["selected"] in (r["se_ev"], r["se_sv"]), with_nash),
        yield_fraction_ne=frac(lambda r: r["selected"][0] == 1, with_nash),
        yield_fraction_se_ev=frac(lambda r: r["se_ev"][0] == 1, results),
        yield_fraction_se_sv=frac(lambda r: r["se_sv"][0] == 1, results),
    )


# --- trace output -----------------------------------------------------------------

def write_trace_csv(trace: EpisodeTrace, path) -> None:
    """Delimiter-separated episode record: per-step vehicle rows plus, at each
    cycle boundary, belief rows and the selected (row, column, kind)."""
    by_cycle: dict[int, list[tuple]] = {}
    for row in trace.steps:
        by_cycle.setdefault(row[0], []).append(row)
    with open(path, "w") as fh:
        fh.write("cycle,t,vehicle_id,x,y,theta,v,a,delta\n")
        for rec in trace.cycles:
            for vid, (pa, py) in rec.beliefs.items():
                fh.write(f"{rec.cycle},{rec.t0:.2f},belief:{vid},{pa:.6f},{py:.6f},,,,\n")
            fh.write(f"{rec.cycle},{rec.t0:.2f},selection,{rec.row},{rec.col},"
                     f"{rec.kind},{rec.social_cost:.6f},{int(rec.fallback_used)},"
                     f"{rec.sequence}\n")
            for row in by_cycle.get(rec.cycle, []):
                fh.write(f"{row[0]},{row[1]:.2f},{row[2]},"
                         + ",".join(f"{x:.6f}" for x in row[3:]) + "\n")
        fh.write(f"# outcome={trace.outcome.value}"
                 + (f" time_to_merge={trace.time_to_merge:.2f}" if trace.time_to_merge else "")
                 + f" planner={trace.planner} seed={trace.seed}\n")
