"""Episode orchestration: observe, accumulate, predict, plan, move, repeat.

One step synchronizes the whole team: all agents observe, the shared cloud
is deduplicated, the planner picks one viewpoint per agent, and all agents
fly their planned paths. The episode stops once a step grows the unique
point count by less than the stopping ratio allows, or on the step cap, or
when the planner has no feasible move left.
"""
from __future__ import annotations

import hashlib
import time
from dataclasses import dataclass, field

import numpy as np

from .candidates import CandidateConfig, generate_candidates
from .errors import PlannerStuck, SetupError
from .geometry import Pose, cloud_stats, key_set
from .nbv import PlannerConfig, TeamSelection, select_frontier_multi, select_map_nbv
from .planning import CollisionWorld, RrtConfig
from .predictors import PredictorKind, predict, run_external_predictor
from .scene import Box, OccupancyGrid, Scene, accumulate, synthesize_observation, update_occupancy
from .visibility import SensorModel

PLANNER_KINDS = ("map_nbv", "pred_nbv", "frontier_multi")

TERMINATED_CONVERGED = "converged"
TERMINATED_MAX_STEPS = "max_steps"
TERMINATED_STUCK = "planner_stuck"


def converged(previous_count: int, current_count: int, stopping_ratio: float) -> bool:
    """Stop once the previous step's count reaches the ratio of the current one."""
    return previous_count >= stopping_ratio * current_count


@dataclass
class AgentState:
    id: int
    pose: Pose
    trajectory: list[Pose] = field(default_factory=list)
    distance_traveled: float = 0.0

    def __post_init__(self):
        if not self.trajectory:
            self.trajectory = [self.pose]


@dataclass
class EpisodeConfig:
    scene: Scene
    planner: str = "map_nbv"
    team_size: int = 2
    predictor: str | dict = "mirror_symmetry"
    spawn_poses: list[Pose] | None = None
    sensor: SensorModel = field(default_factory=SensorModel)
    candidate_cfg: CandidateConfig = field(default_factory=CandidateConfig)
    planner_cfg: PlannerConfig | None = None
    rrt_cfg: RrtConfig | None = None
    stopping_ratio: float = 0.95
    max_steps: int = 30
    seed: int = 0
    planner_overrides: dict = field(default_factory=dict)
    rrt_overrides: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.planner not in PLANNER_KINDS:
            raise ValueError(f"unknown planner '{self.planner}'; expected one of {PLANNER_KINDS}")
        if self.team_size < 1:
            raise ValueError("team_size must be >= 1")
        if self.planner == "pred_nbv" and self.team_size != 1:
            raise ValueError("pred_nbv is the single-agent planner; team_size must be 1")
        if not 0.0 < self.stopping_ratio < 1.0:
            raise ValueError("stopping_ratio must be in (0, 1)")
        if self.max_steps < 1:
            raise ValueError("max_steps must be >= 1")


@dataclass
class StepRecord:
    poses: list[Pose]
    joint_gain: int
    total_effort: float
    candidate_indices: tuple
    threshold_fallbacks: list[int]


@dataclass
class EpisodeReport:
    scene_name: str
    planner: str
    team_size: int
    predictor: str
    seed: int
    settings: dict
    points_per_step: list[int] = field(default_factory=list)
    distances_per_step: list[list[float]] = field(default_factory=list)
    steps: list[StepRecord] = field(default_factory=list)
    termination: str = ""
    step_seconds: list[float] = field(default_factory=list)
    clouds: list[np.ndarray] = field(default_factory=list)
    trajectories: list[list[Pose]] = field(default_factory=list)

    @property
    def final_points(self) -> int:
        return self.points_per_step[-1] if self.points_per_step else 0

    @property
    def total_distance(self) -> float:
        return sum(self.distances_per_step[-1]) if self.distances_per_step else 0.0


@dataclass
class ResolvedSettings:
    """All numeric defaults actually used, recorded for provenance."""

    dedup_resolution: float
    occupancy_resolution: float
    safety_margin: float
    planner_cfg: PlannerConfig
    rrt_cfg: RrtConfig
    grid_bounds: Box


def resolve_settings(cfg: EpisodeConfig) -> ResolvedSettings:
    """Fill scene-dependent defaults: resolutions scale with object size."""
    cloud = cfg.scene.object_cloud
    diagonal = float(np.linalg.norm(cloud.max(axis=0) - cloud.min(axis=0)))
    ov = dict(cfg.planner_overrides)
    if cfg.planner_cfg is not None:
        dedup = cfg.planner_cfg.dedup_resolution
    else:
        dedup = ov.pop("dedup_resolution", 0.0125 * diagonal)
    occupancy = 2.0 * dedup
    margin = 2.0 * occupancy
    if cfg.planner_cfg is not None:
        planner_cfg = cfg.planner_cfg
    else:
        ov.setdefault("baseline_distance_threshold", 5.0 * occupancy)
        ov.setdefault("object_proximity", 4.0 * occupancy)
        planner_cfg = PlannerConfig(dedup_resolution=dedup, **ov)
    rov = dict(cfg.rrt_overrides)
    if cfg.rrt_cfg is not None:
        rrt = cfg.rrt_cfg
    else:
        rov.setdefault("step_size", 4.0 * occupancy)
        rov.setdefault("seed", cfg.seed)
        rrt = RrtConfig(**rov)

    stats = cloud_stats(cloud)
    half = 1.75 * stats.d_max + 2.0 * occupancy
    grid_bounds = Box(stats.centroid - half, stats.centroid + half)
    return ResolvedSettings(
        dedup_resolution=dedup,
        occupancy_resolution=occupancy,
        safety_margin=margin,
        planner_cfg=planner_cfg,
        rrt_cfg=rrt,
        grid_bounds=grid_bounds,
    )


def default_spawn_poses(scene: Scene, team_size: int, cfg: CandidateConfig = CandidateConfig()) -> list[Pose]:
    """Adjacent spawns on the mid viewing ring, 10 degrees apart.

    Agent 0 spawns at angle 0 regardless of team size, so single-agent and
    multi-agent runs start from the same first pose.
    """
    stats = cloud_stats(scene.object_cloud)
    radius = cfg.mid_radius_scale * stats.d_max
    poses = []
    for i in range(team_size):
        angle = np.radians(10.0 * i)
        position = stats.centroid + np.array([radius * np.cos(angle), radius * np.sin(angle), 0.0])
        poses.append(Pose.aimed_at(position, stats.centroid))
    return poses


def _resolve_predictor(cfg: EpisodeConfig, resolved: ResolvedSettings):
    spec = cfg.predictor
    if isinstance(spec, dict):
        command = spec.get("command")
        if not command:
            raise ValueError("external predictor spec needs a 'command' key")
        return "external", lambda partial: run_external_predictor(command, partial)
    kind = PredictorKind(spec)
    if kind is PredictorKind.EXTERNAL:
        raise ValueError("external predictor must be given as {'command': ...}")
    return kind.value, lambda partial: predict(
        kind, partial, scene=cfg.scene, resolution=resolved.dedup_resolution
    )


def _settings_dict(cfg: EpisodeConfig, resolved: ResolvedSettings) -> dict:
    p, r = resolved.planner_cfg, resolved.rrt_cfg
    return {
        "dedup_resolution": resolved.dedup_resolution,
        "occupancy_resolution": resolved.occupancy_resolution,
        "safety_margin": resolved.safety_margin,
        "tau": p.tau,
        "hpr_exponent": p.hpr_exponent,
        "baseline_distance_threshold": p.baseline_distance_threshold,
        "standoff_scale": p.standoff_scale,
        "object_proximity": p.object_proximity,
        "sensor": {
            "horizontal_fov": cfg.sensor.horizontal_fov,
            "vertical_fov": cfg.sensor.vertical_fov,
            "min_range": cfg.sensor.min_range,
            "max_range": cfg.sensor.max_range,
        },
        "candidate_rings": {
            "mid_radius_scale": cfg.candidate_cfg.mid_radius_scale,
            "outer_radius_scale": cfg.candidate_cfg.outer_radius_scale,
            "height_offset_scale": cfg.candidate_cfg.height_offset_scale,
            "angular_step": cfg.candidate_cfg.angular_step,
        },
        "rrt": {
            "step_size": r.step_size,
            "max_iterations": r.max_iterations,
            "goal_tolerance": r.goal_tolerance,
            "seed": r.seed,
        },
        "stopping_ratio": cfg.stopping_ratio,
        "max_steps": cfg.max_steps,
    }


def run_episode(cfg: EpisodeConfig) -> EpisodeReport:
    """Run one reconstruction episode; never raises for planner dead ends.

    Raises SetupError when a spawn pose is blocked or an agent cannot see
    the object at all from its spawn.
    """
    resolved = resolve_settings(cfg)
    pcfg, rrt = resolved.planner_cfg, resolved.rrt_cfg
    predictor_name, predictor = _resolve_predictor(cfg, resolved)
    world = CollisionWorld.from_scene(
        cfg.scene, resolved.occupancy_resolution, resolved.safety_margin
    )

    spawns = cfg.spawn_poses or default_spawn_poses(cfg.scene, cfg.team_size, cfg.candidate_cfg)
    if len(spawns) != cfg.team_size:
        raise SetupError(f"need {cfg.team_size} spawn poses, got {len(spawns)}")
    blocked = ~world.points_free(np.array([p.position for p in spawns]))
    if blocked.any():
        raise SetupError(f"spawn poses in collision or out of bounds: {np.flatnonzero(blocked).tolist()}")

    agents = [AgentState(id=i, pose=pose) for i, pose in enumerate(spawns)]
    use_grid = cfg.planner == "frontier_multi"
    grid = OccupancyGrid.covering(resolved.grid_bounds, resolved.occupancy_resolution) if use_grid else None

    report = EpisodeReport(
        scene_name=cfg.scene.name,
        planner=cfg.planner,
        team_size=cfg.team_size,
        predictor=predictor_name,
        seed=cfg.seed,
        settings=_settings_dict(cfg, resolved),
    )

    def observe(step_index: int):
        nonlocal grid
        observations = [
            synthesize_observation(
                cfg.scene, agent.pose, cfg.sensor, pcfg.hpr_exponent,
                agent_id=agent.id, step_index=step_index,
            )
            for agent in agents
        ]
        if use_grid:
            for obs in observations:  # agents are already in id order
                grid = update_occupancy(grid, obs)
        return observations

    t0 = time.perf_counter()
    observations = observe(0)
    if any(obs.cloud.shape[0] == 0 for obs in observations):
        empty = [obs.agent_id for obs in observations if obs.cloud.shape[0] == 0]
        raise SetupError(f"agents {empty} cannot see the object from spawn")

    observed = accumulate(np.empty((0, 3)), observations, pcfg.dedup_resolution)
    report.points_per_step.append(int(observed.shape[0]))
    report.distances_per_step.append([0.0 for _ in agents])
    report.clouds.append(observed.copy())
    report.step_seconds.append(time.perf_counter() - t0)

    t = 0
    while True:
        if t >= 1 and converged(report.points_per_step[t - 1], report.points_per_step[t], cfg.stopping_ratio):
            report.termination = TERMINATED_CONVERGED
            break
        if t >= cfg.max_steps:
            report.termination = TERMINATED_MAX_STEPS
            break

        t0 = time.perf_counter()
        observed_keys = key_set(observed, pcfg.dedup_resolution)
        try:
            if cfg.planner in ("map_nbv", "pred_nbv"):
                prediction = predictor(observed)
                stats = cloud_stats(prediction.cloud)
                candidates = generate_candidates(stats, cfg.candidate_cfg)
                selection = select_map_nbv(
                    candidates, agents, prediction.cloud, observed_keys,
                    world, cfg.sensor, pcfg, rrt,
                )
            else:
                obs_stats = cloud_stats(observed)
                selection = select_frontier_multi(
                    grid, agents, obs_stats.centroid, observed_keys,
                    pcfg, world, cfg.sensor, rrt,
                )
        except PlannerStuck:
            report.termination = TERMINATED_STUCK
            report.step_seconds.append(time.perf_counter() - t0)
            break

        for agent, pose, path in zip(agents, selection.poses, selection.paths):
            agent.pose = pose
            agent.trajectory.append(pose)
            agent.distance_traveled += path.length

        t += 1
        observations = observe(t)
        observed = accumulate(observed, observations, pcfg.dedup_resolution)
        report.points_per_step.append(int(observed.shape[0]))
        report.distances_per_step.append([a.distance_traveled for a in agents])
        report.clouds.append(observed.copy())
        report.steps.append(
            StepRecord(
                poses=list(selection.poses),
                joint_gain=selection.joint_gain,
                total_effort=selection.total_effort,
                candidate_indices=tuple(selection.candidate_indices),
                threshold_fallbacks=list(selection.threshold_fallbacks),
            )
        )
        report.step_seconds.append(time.perf_counter() - t0)

    report.trajectories = [list(agent.trajectory) for agent in agents]
    return report


def first_iteration_gain(cfg: EpisodeConfig) -> int:
    """Unique points after exactly one plan-and-move cycle from spawn."""
    one_step = EpisodeConfig(
        scene=cfg.scene,
        planner=cfg.planner,
        team_size=cfg.team_size,
        predictor=cfg.predictor,
        spawn_poses=cfg.spawn_poses,
        sensor=cfg.sensor,
        candidate_cfg=cfg.candidate_cfg,
        planner_cfg=cfg.planner_cfg,
        rrt_cfg=cfg.rrt_cfg,
        stopping_ratio=cfg.stopping_ratio,
        max_steps=1,
        seed=cfg.seed,
    )
    report = run_episode(one_step)
    if len(report.points_per_step) < 2:
        raise PlannerStuck("planner could not complete the first iteration")
    return report.points_per_step[1]


def derive_seed(master: int, *parts) -> int:
    """Stable per-cell seed from the master seed and cell labels."""
    h = hashlib.blake2b(digest_size=8)
    h.update(np.int64(master).tobytes())
    for part in parts:
        h.update(str(part).encode())
        h.update(b"\x00")
    return int.from_bytes(h.digest(), "little") % (2**63)


@dataclass
class SuiteCell:
    scene_name: str
    planner: str
    team_size: int
    seed: int
    report: EpisodeReport | None = None
    error: str = ""


def run_suite(
    scenes,
    planners,
    seeds,
    *,
    team_size: int = 2,
    predictor: str | dict = "mirror_symmetry",
    sensor: SensorModel | None = None,
    candidate_cfg: CandidateConfig | None = None,
    stopping_ratio: float = 0.95,
    max_steps: int = 30,
    planner_overrides: dict | None = None,
    rrt_overrides: dict | None = None,
) -> list[SuiteCell]:
    """Cartesian product of scenes x planners x master seeds.

    Each cell derives its own seed from (master, scene, planner); per-cell
    failures are recorded and the suite continues. The single-agent planner
    always runs with a team of one.
    """
    cells = []
    for name, scene in scenes:
        for planner in planners:
            for master in seeds:
                n = 1 if planner == "pred_nbv" else team_size
                cell_seed = derive_seed(master, name, planner)
                cell = SuiteCell(scene_name=name, planner=planner, team_size=n, seed=cell_seed)
                try:
                    cfg = EpisodeConfig(
                        scene=scene,
                        planner=planner,
                        team_size=n,
                        predictor=predictor,
                        sensor=sensor or SensorModel(),
                        candidate_cfg=candidate_cfg or CandidateConfig(),
                        stopping_ratio=stopping_ratio,
                        max_steps=max_steps,
                        seed=cell_seed,
                        planner_overrides=dict(planner_overrides or {}),
                        rrt_overrides=dict(rrt_overrides or {}),
                    )
                    cell.report = run_episode(cfg)
                except Exception as exc:  # per-cell isolation, suite continues
                    cell.error = f"{type(exc).__name__}: {exc}"
                cells.append(cell)
    return cells
