"""View-selection policies: joint prediction-guided NBV and the frontier baseline.

The joint policy scores candidate tuples by the number of new unique voxel
keys the team would see and picks the cheapest tuple (total path length)
whose joint gain reaches a fraction tau of the best achievable gain. With a
one-agent team it degenerates to the single-agent prediction-guided planner.
The baseline scores frontier-derived poses by unknown volume instead.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import cKDTree

from .candidates import CandidateSet, feasible_mask, visited_mask
from .errors import PlannerStuck, PlanningFailure
from .geometry import Pose, key_set, unpack_keys
from .planning import CollisionWorld, Path, RrtConfig, control_effort, plan_path
from .scene import FREE, UNKNOWN, OccupancyGrid
from .visibility import SensorModel, sensor_gate, visible_points


@dataclass(frozen=True)
class PlannerConfig:
    dedup_resolution: float
    tau: float = 0.95
    hpr_exponent: float = 3.0
    baseline_distance_threshold: float = 0.5
    max_team_size: int = 4
    standoff_scale: float = 1.5
    object_proximity: float = 0.2

    def __post_init__(self):
        if not 0.0 < self.tau <= 1.0:
            raise ValueError("tau must be in (0, 1]")
        if self.dedup_resolution <= 0:
            raise ValueError("dedup_resolution must be positive")
        if self.max_team_size < 1:
            raise ValueError("max_team_size must be >= 1")


@dataclass
class TeamSelection:
    poses: list[Pose]
    joint_gain: int
    total_effort: float
    paths: list[Path] = field(default_factory=list)
    candidate_indices: tuple = ()
    threshold_fallbacks: list[int] = field(default_factory=list)

    def __post_init__(self):
        if self.joint_gain < 0 or self.total_effort < 0:
            raise ValueError("gain and effort must be non-negative")


def expected_gain(prediction, observed_keys: np.ndarray, pose: Pose, sensor: SensorModel, cfg: PlannerConfig) -> np.ndarray:
    """New unique voxel keys of the prediction visible from a pose.

    Returns the sorted packed key set of the visible predicted points at the
    dedup resolution, minus the already observed keys.
    """
    idx = visible_points(prediction, pose, sensor, cfg.hpr_exponent)
    if idx.size == 0:
        return np.empty(0, dtype=np.int64)
    keys = key_set(np.asarray(prediction)[idx], cfg.dedup_resolution)
    return np.setdiff1d(keys, observed_keys, assume_unique=True)


def joint_gain(prediction, observed_keys: np.ndarray, poses, sensor: SensorModel, cfg: PlannerConfig) -> int:
    """Size of the union of per-pose expected gains (duplicates count once)."""
    if not poses:
        raise ValueError("joint_gain requires at least one pose")
    union = np.empty(0, dtype=np.int64)
    for pose in poses:
        union = np.union1d(union, expected_gain(prediction, observed_keys, pose, sensor, cfg))
    return int(union.size)


def select_joint(gain_sets, efforts: np.ndarray, tau: float):
    """Exhaustive tau-constrained argmin over ordered candidate tuples.

    ``gain_sets[c]`` is the sorted key array a candidate would newly reveal;
    ``efforts[i, c]`` is agent i's path length to candidate c (inf when the
    candidate is infeasible for that agent). Over all ordered tuples of
    pairwise-distinct feasible candidates, finds the max joint gain g*, then
    returns the tuple minimizing total effort among those with gain >=
    tau * g*. Ties on effort break to higher gain, then to the
    lexicographically smallest candidate index tuple.

    Returns (tuple_indices, gain, effort); raises PlannerStuck when no
    feasible tuple exists.
    """
    efforts = np.asarray(efforts, dtype=np.float64)
    n, n_candidates = efforts.shape
    usable = [np.flatnonzero(np.isfinite(efforts[i])) for i in range(n)]
    if any(u.size == 0 for u in usable):
        raise PlannerStuck("an agent has no feasible candidate")

    union_cache: dict[tuple, int] = {}

    def tuple_gain(combo: tuple) -> int:
        key = tuple(sorted(combo))
        if key not in union_cache:
            union = gain_sets[key[0]]
            for c in key[1:]:
                union = np.union1d(union, gain_sets[c])
            union_cache[key] = int(union.size)
        return union_cache[key]

    candidates_sorted = sorted(set(np.concatenate(usable).tolist()))
    evaluated = []
    for combo in itertools.permutations(candidates_sorted, n):
        if any(not np.isfinite(efforts[i, c]) for i, c in enumerate(combo)):
            continue
        evaluated.append((combo, tuple_gain(combo), float(efforts[np.arange(n), combo].sum())))
    if not evaluated:
        raise PlannerStuck("no pairwise-distinct feasible candidate tuple exists")

    g_star = max(g for _, g, _ in evaluated)
    best = None
    for combo, g, e in evaluated:
        if g < tau * g_star:
            continue
        if best is None or (e, -g) < (best[2], -best[1]):
            best = (combo, g, e)
    return best


def select_map_nbv(
    candidates: CandidateSet,
    agents,
    prediction,
    observed_keys: np.ndarray,
    world: CollisionWorld,
    sensor: SensorModel,
    cfg: PlannerConfig,
    rrt_cfg: RrtConfig,
) -> TeamSelection:
    """Joint next-best-view selection for the whole team.

    Candidates outside bounds, in collision, already visited by an agent
    (within 1 mm, per agent), or unreachable are infeasible for that agent.
    """
    n = len(agents)
    if n < 1:
        raise ValueError("select_map_nbv requires at least one agent")
    if n > cfg.max_team_size:
        raise ValueError(f"team of {n} exceeds max_team_size {cfg.max_team_size}")

    n_candidates = len(candidates)
    feasible = feasible_mask(candidates, world)
    efforts = np.full((n, n_candidates), np.inf)
    paths: dict[tuple[int, int], Path] = {}
    for i, agent in enumerate(agents):
        visited = visited_mask(candidates, [p.position for p in agent.trajectory])
        for c in np.flatnonzero(feasible & ~visited):
            try:
                path = plan_path(world, agent.pose.position, candidates[c].pose.position, rrt_cfg)
            except PlanningFailure:
                continue
            efforts[i, c] = path.length
            paths[(i, c)] = path

    needed = np.flatnonzero(np.isfinite(efforts).any(axis=0))
    gain_sets = [np.empty(0, dtype=np.int64)] * n_candidates
    for c in needed:
        gain_sets[c] = expected_gain(prediction, observed_keys, candidates[c].pose, sensor, cfg)

    combo, gain, effort = select_joint(gain_sets, efforts, cfg.tau)
    return TeamSelection(
        poses=[candidates[c].pose for c in combo],
        joint_gain=gain,
        total_effort=effort,
        paths=[paths[(i, c)] for i, c in enumerate(combo)],
        candidate_indices=combo,
    )


def select_pred_nbv(
    candidates: CandidateSet,
    agent,
    prediction,
    observed_keys: np.ndarray,
    world: CollisionWorld,
    sensor: SensorModel,
    cfg: PlannerConfig,
    rrt_cfg: RrtConfig,
) -> Pose:
    """Single-agent next best view: the team selection with a team of one."""
    selection = select_map_nbv(candidates, [agent], prediction, observed_keys, world, sensor, cfg, rrt_cfg)
    return selection.poses[0]


def detect_frontiers(grid: OccupancyGrid) -> np.ndarray:
    """Free cells with at least one unknown face neighbor, as (M, 3) indices.

    Neighbors outside the grid do not count as unknown. Rows come back in
    lexicographic cell order.
    """
    free = grid.cells == FREE
    unknown = grid.cells == UNKNOWN
    near_unknown = np.zeros_like(free)
    for axis in range(3):
        shifted = np.zeros_like(unknown)
        src = [slice(None)] * 3
        dst = [slice(None)] * 3
        src[axis], dst[axis] = slice(1, None), slice(None, -1)
        shifted[tuple(dst)] = unknown[tuple(src)]
        near_unknown |= shifted
        shifted = np.zeros_like(unknown)
        src[axis], dst[axis] = slice(None, -1), slice(1, None)
        shifted[tuple(dst)] = unknown[tuple(src)]
        near_unknown |= shifted
    return np.argwhere(free & near_unknown)


def _frontier_poses(grid, frontiers, observed_centroid, object_keys, cfg: PlannerConfig):
    """Standoff poses for frontier cells near the observed object.

    Each qualifying frontier center is pushed along the outward ray from the
    observed centroid to the standoff radius; the pose faces back at the
    centroid. Poses closer together than one grid cell are deduplicated.
    """
    obj_centers = (unpack_keys(object_keys) + 0.5) * cfg.dedup_resolution
    centroid = np.asarray(observed_centroid, dtype=np.float64)
    obs_d_max = float(np.linalg.norm(obj_centers - centroid, axis=1).max())
    standoff = cfg.standoff_scale * obs_d_max

    centers = grid.centers(frontiers)
    dists, _ = cKDTree(obj_centers).query(centers)
    near = dists <= cfg.object_proximity
    if near.any():
        centers = centers[near]

    poses = []
    seen_cells = set()
    for center in centers:
        outward = center - centroid
        norm = float(np.linalg.norm(outward))
        if norm < 1e-9:
            continue
        outward /= norm
        position = centroid + outward * standoff
        cell = tuple(np.floor(position / grid.resolution).astype(np.int64))
        if cell in seen_cells:
            continue
        seen_cells.add(cell)
        poses.append(Pose(position, -outward))
    return poses


def select_frontier_multi(
    grid: OccupancyGrid,
    agents,
    observed_centroid,
    object_keys: np.ndarray,
    cfg: PlannerConfig,
    world: CollisionWorld,
    sensor: SensorModel,
    rrt_cfg: RrtConfig,
) -> TeamSelection:
    """Multi-agent frontier baseline.

    Frontier poses are scored by the count of unknown cells inside the
    sensor frustum. The first agent takes the best feasible pose; each later
    agent takes the best remaining pose farther than the distance threshold
    from every pose already chosen this round, falling back to the best
    remaining pose when no such pose exists (recorded per agent).
    """
    frontiers = detect_frontiers(grid)
    if frontiers.shape[0] == 0:
        raise PlannerStuck("no frontier cells exist")
    poses = _frontier_poses(grid, frontiers, observed_centroid, object_keys, cfg)
    if not poses:
        raise PlannerStuck("no usable frontier pose")

    unknown_centers = grid.centers(np.argwhere(grid.cells == UNKNOWN))
    scored = []
    for idx, pose in enumerate(poses):
        visible_unknown = sensor_gate(unknown_centers, pose, sensor) if unknown_centers.size else np.empty(0, dtype=np.int64)
        scored.append((idx, pose, visible_unknown))
    order = sorted(scored, key=lambda item: (-item[2].size, item[0]))

    chosen: list[tuple[Pose, Path, np.ndarray]] = []
    fallbacks = []
    remaining = list(order)
    for agent in agents:
        pick = None
        for threshold_pass in (True, False):
            for entry in remaining:
                _, pose, _ = entry
                if threshold_pass and any(
                    np.linalg.norm(pose.position - prev[0].position) <= cfg.baseline_distance_threshold
                    for prev in chosen
                ):
                    continue
                if not world.point_free(pose.position):
                    continue
                try:
                    path = plan_path(world, agent.pose.position, pose.position, rrt_cfg)
                except PlanningFailure:
                    continue
                pick = (entry, path, threshold_pass)
                break
            if pick is not None:
                break
        if pick is None:
            raise PlannerStuck("no feasible frontier pose remains for an agent")
        entry, path, passed_threshold = pick
        if not passed_threshold:
            fallbacks.append(agent.id)
        chosen.append((entry[1], path, entry[2]))
        remaining.remove(entry)

    union = np.empty(0, dtype=np.int64)
    for _, _, vis in chosen:
        union = np.union1d(union, vis)
    return TeamSelection(
        poses=[c[0] for c in chosen],
        joint_gain=int(union.size),
        total_effort=float(sum(c[1].length for c in chosen)),
        paths=[c[1] for c in chosen],
        threshold_fallbacks=fallbacks,
    )
