"""Collision-free point-to-point planning and the control-effort distance.

RRT-Connect over a collision world of inflated analytic obstacles plus the
object's occupancy voxels, followed by greedy shortcut smoothing. Control
effort between two poses is the length of the planned path; yaw changes are
free (multirotors turn in place).
"""
from __future__ import annotations

import hashlib
from dataclasses import dataclass

import numpy as np

from .errors import PlanningFailure
from .geometry import key_set, pack_keys, unpack_keys
from .scene import Box

_GOAL_BIAS = 0.05


@dataclass(frozen=True)
class RrtConfig:
    step_size: float = 0.25
    max_iterations: int = 3000
    goal_tolerance: float = 1e-6
    seed: int = 0

    def __post_init__(self):
        if self.step_size <= 0:
            raise ValueError("step_size must be positive")
        if self.max_iterations <= 0:
            raise ValueError("max_iterations must be positive")


@dataclass(frozen=True)
class Path:
    waypoints: np.ndarray
    length: float

    @classmethod
    def from_waypoints(cls, waypoints) -> "Path":
        waypoints = np.asarray(waypoints, dtype=np.float64).reshape(-1, 3)
        if waypoints.shape[0] < 2:
            return cls(waypoints=waypoints, length=0.0)
        segs = np.linalg.norm(np.diff(waypoints, axis=0), axis=1)
        return cls(waypoints=waypoints, length=float(segs.sum()))


class CollisionWorld:
    """Inflated flight obstacles: analytic volumes plus object voxels.

    The target object enters as its ground-truth cloud voxelized at the
    occupancy resolution; inflation by the safety margin happens once, at
    construction, by dilating the occupied key set.
    """

    def __init__(
        self,
        world_bounds: Box,
        boxes=(),
        spheres=(),
        safety_margin: float = 0.0,
        object_cloud=None,
        occupancy_resolution: float | None = None,
    ):
        if safety_margin < 0:
            raise ValueError("safety margin must be non-negative")
        self.world_bounds = world_bounds
        self.boxes = list(boxes)
        self.spheres = list(spheres)
        self.safety_margin = float(safety_margin)
        self.occupancy_resolution = occupancy_resolution
        self._blocked_keys = np.empty(0, dtype=np.int64)
        if object_cloud is not None and len(object_cloud):
            if occupancy_resolution is None or occupancy_resolution <= 0:
                raise ValueError("object voxelization needs a positive occupancy resolution")
            occupied = key_set(object_cloud, occupancy_resolution)
            self._blocked_keys = _dilate_keys(occupied, occupancy_resolution, safety_margin)

    @classmethod
    def from_scene(cls, scene, occupancy_resolution: float, safety_margin: float) -> "CollisionWorld":
        boxes = [o for o in scene.obstacles if isinstance(o, Box)]
        spheres = [o for o in scene.obstacles if not isinstance(o, Box)]
        return cls(
            world_bounds=scene.world_bounds,
            boxes=boxes,
            spheres=spheres,
            safety_margin=safety_margin,
            object_cloud=scene.object_cloud,
            occupancy_resolution=occupancy_resolution,
        )

    def points_free(self, points) -> np.ndarray:
        pts = np.asarray(points, dtype=np.float64).reshape(-1, 3)
        free = self.world_bounds.contains(pts)
        for box in self.boxes:
            free &= ~box.contains(pts, margin=self.safety_margin)
        for sphere in self.spheres:
            free &= ~sphere.contains(pts, margin=self.safety_margin)
        if self._blocked_keys.size:
            keys = pack_keys(np.floor(pts / self.occupancy_resolution).astype(np.int64))
            idx = np.searchsorted(self._blocked_keys, keys)
            idx = np.minimum(idx, self._blocked_keys.size - 1)
            free &= self._blocked_keys[idx] != keys
        return free

    def point_free(self, point) -> bool:
        return bool(self.points_free(np.asarray(point).reshape(1, 3))[0])

    def segment_free(self, a, b, resolution: float) -> bool:
        a = np.asarray(a, dtype=np.float64).reshape(3)
        b = np.asarray(b, dtype=np.float64).reshape(3)
        dist = float(np.linalg.norm(b - a))
        n = max(int(np.ceil(dist / max(resolution, 1e-12))), 1) + 1
        ts = np.linspace(0.0, 1.0, n)
        samples = a[None, :] + ts[:, None] * (b - a)[None, :]
        return bool(self.points_free(samples).all())


def _dilate_keys(occupied: np.ndarray, resolution: float, margin: float) -> np.ndarray:
    """Grow a voxel key set so membership means 'within margin of an occupied voxel'."""
    reach = int(np.ceil(margin / resolution)) + 1
    offsets = []
    rng = range(-reach, reach + 1)
    for ox in rng:
        for oy in rng:
            for oz in rng:
                gap = np.maximum(np.abs(np.array([ox, oy, oz])) - 1, 0)
                if np.linalg.norm(gap) * resolution <= margin:
                    offsets.append((ox, oy, oz))
    offsets = np.asarray(offsets, dtype=np.int64)
    cells = unpack_keys(occupied)
    grown = (cells[:, None, :] + offsets[None, :, :]).reshape(-1, 3)
    return np.unique(pack_keys(grown))


def is_collision_free(world: CollisionWorld, a, b, resolution: float) -> bool:
    """Segment check at sample spacing <= resolution, endpoints included."""
    return world.segment_free(a, b, resolution)


def _per_call_rng(cfg: RrtConfig, a: np.ndarray, b: np.ndarray) -> np.random.Generator:
    # Seed from (cfg.seed, endpoints) so episode determinism survives any
    # reordering or caching of planner calls.
    digest = hashlib.blake2b(
        np.int64(cfg.seed).tobytes() + a.tobytes() + b.tobytes(), digest_size=8
    ).digest()
    return np.random.default_rng(int.from_bytes(digest, "little"))


class _Tree:
    def __init__(self, root: np.ndarray, capacity: int):
        self.nodes = np.empty((capacity + 2, 3), dtype=np.float64)
        self.nodes[0] = root
        self.parents = [-1]
        self.size = 1

    def nearest(self, q: np.ndarray) -> int:
        d = np.linalg.norm(self.nodes[: self.size] - q, axis=1)
        return int(np.argmin(d))

    def add(self, q: np.ndarray, parent: int) -> int:
        if self.size >= self.nodes.shape[0]:
            self.nodes = np.vstack([self.nodes, np.empty_like(self.nodes)])
        self.nodes[self.size] = q
        self.parents.append(parent)
        self.size += 1
        return self.size - 1

    def chain(self, idx: int) -> list[np.ndarray]:
        out = []
        while idx >= 0:
            out.append(self.nodes[idx].copy())
            idx = self.parents[idx]
        return out


_TRAPPED, _ADVANCED, _REACHED = 0, 1, 2


def _extend(tree: _Tree, target: np.ndarray, world: CollisionWorld, cfg: RrtConfig):
    near_idx = tree.nearest(target)
    near = tree.nodes[near_idx]
    delta = target - near
    dist = float(np.linalg.norm(delta))
    if dist <= cfg.goal_tolerance:
        return _REACHED, near_idx
    if dist <= cfg.step_size:
        new = target.copy()
        status = _REACHED
    else:
        new = near + delta * (cfg.step_size / dist)
        status = _ADVANCED
    if not world.segment_free(near, new, cfg.step_size / 2.0):
        return _TRAPPED, near_idx
    new_idx = tree.add(new, near_idx)
    return status, new_idx


def _connect(tree: _Tree, target: np.ndarray, world: CollisionWorld, cfg: RrtConfig):
    while True:
        status, idx = _extend(tree, target, world, cfg)
        if status != _ADVANCED:
            return status, idx


def plan_path(world: CollisionWorld, start, goal, cfg: RrtConfig) -> Path:
    """RRT-Connect then greedy shortcut smoothing; deterministic per seed.

    Raises PlanningFailure when either endpoint is blocked or no connection
    is found within the iteration budget.
    """
    start = np.asarray(start, dtype=np.float64).reshape(3)
    goal = np.asarray(goal, dtype=np.float64).reshape(3)
    if np.array_equal(start, goal):
        return Path.from_waypoints(start[None, :])
    if not world.point_free(start):
        raise PlanningFailure("start position is in collision or out of bounds")
    if not world.point_free(goal):
        raise PlanningFailure("goal position is in collision or out of bounds")
    check_res = cfg.step_size / 2.0
    if world.segment_free(start, goal, check_res):
        return Path.from_waypoints(np.vstack([start, goal]))

    rng = _per_call_rng(cfg, start, goal)
    lo, hi = world.world_bounds.lo, world.world_bounds.hi
    tree_a, tree_b = _Tree(start, cfg.max_iterations), _Tree(goal, cfg.max_iterations)
    a_is_start = True

    for _ in range(cfg.max_iterations):
        if rng.random() < _GOAL_BIAS:
            sample = tree_b.nodes[0].copy()
        else:
            sample = lo + rng.random(3) * (hi - lo)
        status, new_idx = _extend(tree_a, sample, world, cfg)
        if status != _TRAPPED:
            target = tree_a.nodes[new_idx].copy()
            status_b, idx_b = _connect(tree_b, target, world, cfg)
            if status_b == _REACHED:
                chain_a = tree_a.chain(new_idx)[::-1]
                chain_b = tree_b.chain(idx_b)
                waypoints = chain_a + chain_b if a_is_start else chain_b[::-1] + chain_a[::-1]
                return Path.from_waypoints(_shortcut(np.asarray(waypoints), world, check_res))
        tree_a, tree_b = tree_b, tree_a
        a_is_start = not a_is_start

    raise PlanningFailure(f"no path found within {cfg.max_iterations} iterations")


def _shortcut(waypoints: np.ndarray, world: CollisionWorld, resolution: float) -> np.ndarray:
    """Replace waypoint subchains with straight segments, farthest-first."""
    pts = [waypoints[i] for i in range(waypoints.shape[0])]
    changed = True
    while changed:
        changed = False
        i = 0
        while i < len(pts) - 2:
            for j in range(len(pts) - 1, i + 1, -1):
                if world.segment_free(pts[i], pts[j], resolution):
                    if j > i + 1:
                        del pts[i + 1 : j]
                        changed = True
                    break
            i += 1
    return np.asarray(pts)


def control_effort(world: CollisionWorld, from_pose, to_pose, cfg: RrtConfig) -> float:
    """Distance flown between two poses: planned path length, yaw is free."""
    return plan_path(world, from_pose.position, to_pose.position, cfg).length
