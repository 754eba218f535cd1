"""Ground-truth world, synthetic observations, and the occupancy grid.

Observations are synthesized directly from the true object surface points:
obstacles block flight but not sight, mirroring a segmentation pipeline that
isolates the target object.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .geometry import Pose, as_cloud, merge_unique
from .visibility import SensorModel, visible_points

UNKNOWN, FREE, OCCUPIED = 0, 1, 2


@dataclass(frozen=True)
class Box:
    """Axis-aligned box given by opposite corners."""

    lo: np.ndarray
    hi: np.ndarray

    def __post_init__(self):
        lo = np.asarray(self.lo, dtype=np.float64).reshape(3)
        hi = np.asarray(self.hi, dtype=np.float64).reshape(3)
        if (hi < lo).any():
            raise ValueError("box hi corner must be >= lo corner per axis")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    def contains(self, points, margin: float = 0.0) -> np.ndarray:
        pts = as_cloud(points)
        return ((pts >= self.lo - margin) & (pts <= self.hi + margin)).all(axis=1)

    @property
    def diagonal(self) -> float:
        return float(np.linalg.norm(self.hi - self.lo))


@dataclass(frozen=True)
class SphereObstacle:
    center: np.ndarray
    radius: float

    def __post_init__(self):
        object.__setattr__(self, "center", np.asarray(self.center, dtype=np.float64).reshape(3))
        if self.radius < 0:
            raise ValueError("sphere radius must be non-negative")

    def contains(self, points, margin: float = 0.0) -> np.ndarray:
        pts = as_cloud(points)
        return np.linalg.norm(pts - self.center, axis=1) <= self.radius + margin


@dataclass
class Scene:
    """Ground-truth object surface sample, flight obstacles, world extent."""

    object_cloud: np.ndarray
    obstacles: list = field(default_factory=list)
    world_bounds: Box = None
    name: str = "scene"

    def __post_init__(self):
        self.object_cloud = as_cloud(self.object_cloud)
        if self.object_cloud.shape[0] == 0:
            raise ValueError("scene object cloud must be non-empty")
        if self.world_bounds is None:
            raise ValueError("scene requires world bounds")
        if not self.world_bounds.contains(self.object_cloud).all():
            raise ValueError("object cloud extends outside world bounds")


@dataclass(frozen=True)
class Observation:
    """One agent's view of the object at one step, in the world frame."""

    agent_id: int
    pose: Pose
    cloud: np.ndarray
    step_index: int = 0


@dataclass
class OccupancyGrid:
    """Unknown/free/occupied voxel lattice for frontier detection."""

    origin: np.ndarray
    resolution: float
    dims: tuple[int, int, int]
    cells: np.ndarray = None

    def __post_init__(self):
        self.origin = np.asarray(self.origin, dtype=np.float64).reshape(3)
        if self.resolution <= 0:
            raise ValueError("grid resolution must be positive")
        self.dims = tuple(int(d) for d in self.dims)
        if any(d <= 0 for d in self.dims):
            raise ValueError("grid dims must be positive")
        if self.cells is None:
            self.cells = np.full(self.dims, UNKNOWN, dtype=np.int8)
        elif self.cells.shape != self.dims:
            raise ValueError("cells shape does not match dims")

    @classmethod
    def covering(cls, bounds: Box, resolution: float) -> "OccupancyGrid":
        dims = np.maximum(np.ceil((bounds.hi - bounds.lo) / resolution).astype(int), 1)
        return cls(origin=bounds.lo, resolution=resolution, dims=tuple(dims))

    def cell_of(self, points) -> np.ndarray:
        pts = as_cloud(points)
        return np.floor((pts - self.origin) / self.resolution).astype(np.int64)

    def in_grid(self, cells: np.ndarray) -> np.ndarray:
        cells = cells.reshape(-1, 3)
        return ((cells >= 0) & (cells < np.asarray(self.dims))).all(axis=1)

    def centers(self, cells: np.ndarray) -> np.ndarray:
        return self.origin + (np.asarray(cells, dtype=np.float64) + 0.5) * self.resolution

    def copy(self) -> "OccupancyGrid":
        return OccupancyGrid(self.origin.copy(), self.resolution, self.dims, self.cells.copy())


def synthesize_observation(
    scene: Scene,
    pose: Pose,
    sensor: SensorModel,
    hpr_exponent: float = 3.0,
    agent_id: int = 0,
    step_index: int = 0,
) -> Observation:
    """Observe the true object surface from a pose: gate, then hidden point removal."""
    if not scene.world_bounds.contains(pose.position[None, :])[0]:
        raise ValueError("observation pose lies outside world bounds")
    idx = visible_points(scene.object_cloud, pose, sensor, hpr_exponent)
    return Observation(agent_id=agent_id, pose=pose, cloud=scene.object_cloud[idx], step_index=step_index)


def accumulate(observed, new_obs, resolution: float) -> np.ndarray:
    """Fold new observations into the running deduplicated cloud."""
    clouds = [as_cloud(observed)] + [obs.cloud for obs in new_obs]
    return merge_unique(clouds, resolution)


def _traverse_rays(grid: OccupancyGrid, start: np.ndarray, ends: np.ndarray):
    """Cells strictly traversed by segments start -> ends[i] (end cell excluded).

    Vectorized integer grid walk; when a ray crosses a cell corner the x axis
    advances first, then y, then z (deterministic tie rule).
    """
    n = ends.shape[0]
    if n == 0:
        return np.empty((0, 3), dtype=np.int64)
    res = grid.resolution
    start_rel = (start - grid.origin) / res
    ends_rel = (ends - grid.origin) / res

    cell = np.floor(start_rel).astype(np.int64)[None, :].repeat(n, axis=0)
    end_cell = np.floor(ends_rel).astype(np.int64)
    direction = ends_rel - start_rel
    seg_len = np.linalg.norm(direction, axis=1)

    step = np.sign(direction).astype(np.int64)
    safe_dir = np.where(direction == 0.0, 1.0, direction)
    t_delta = np.where(direction == 0.0, np.inf, np.abs(1.0 / safe_dir))
    # Parameter value at which the ray first crosses each axis boundary.
    next_boundary = np.where(step > 0, np.floor(start_rel) + 1.0, np.floor(start_rel))
    t_max = np.where(direction == 0.0, np.inf, (next_boundary - start_rel) / safe_dir)

    alive = (seg_len > 0) & ~(cell == end_cell).all(axis=1)
    visited = [cell[alive].copy()] if alive.any() else []
    # Rays whose start cell equals the end cell traverse nothing.
    max_steps = int(np.abs(end_cell - cell).sum(axis=1).max()) if n else 0
    for _ in range(max_steps):
        if not alive.any():
            break
        # Advance the axis with the smallest t_max; ties resolve to x, y, z.
        axis = np.argmin(t_max, axis=1)
        cell[alive, axis[alive]] += step[alive, axis[alive]]
        t_max[alive, axis[alive]] += t_delta[alive, axis[alive]]
        reached = (cell == end_cell).all(axis=1)
        alive = alive & ~reached
        if alive.any():
            visited.append(cell[alive].copy())
    if not visited:
        return np.empty((0, 3), dtype=np.int64)
    return np.concatenate(visited, axis=0)


def update_occupancy(grid: OccupancyGrid, obs: Observation) -> OccupancyGrid:
    """Return a new grid with observed cells occupied and ray-traversed cells free.

    Occupied cells are never downgraded; applying the same observation twice
    is a no-op the second time. Poses outside the grid are fine: the walk
    simply drops cells that fall outside.
    """
    out = grid.copy()
    if obs.cloud.shape[0] == 0:
        return out

    end_cells = grid.cell_of(obs.cloud)
    inside = grid.in_grid(end_cells)
    end_cells = end_cells[inside]
    points = obs.cloud[inside]
    if points.shape[0] == 0:
        return out

    out.cells[end_cells[:, 0], end_cells[:, 1], end_cells[:, 2]] = OCCUPIED

    traversed = _traverse_rays(grid, obs.pose.position, points)
    if traversed.shape[0]:
        keep = out.in_grid(traversed)
        traversed = traversed[keep]
        states = out.cells[traversed[:, 0], traversed[:, 1], traversed[:, 2]]
        free_cells = traversed[states != OCCUPIED]
        out.cells[free_cells[:, 0], free_cells[:, 1], free_cells[:, 2]] = FREE
    return out
