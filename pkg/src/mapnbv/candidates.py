"""Candidate viewpoint rings around the predicted object.

Three circles centered on the predicted centroid: one at centroid height
with radius 1.5 x d_max, and one each above and below at 0.25 x z-range
offset with radius 1.2 x d_max, sampled every 30 degrees. Every pose faces
the predicted centroid.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import MapNbvError
from .geometry import CloudStats, Pose, unit_vector


class DegenerateObjectError(MapNbvError):
    """Candidate rings are undefined for a zero-extent object."""


@dataclass(frozen=True)
class CandidateConfig:
    mid_radius_scale: float = 1.5
    outer_radius_scale: float = 1.2
    height_offset_scale: float = 0.25
    angular_step: float = 30.0

    def __post_init__(self):
        for name in ("mid_radius_scale", "outer_radius_scale", "height_offset_scale"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        step = self.angular_step
        if not 0 < step <= 120:
            raise ValueError("angular_step must be in (0, 120] degrees")
        if abs(360.0 / step - round(360.0 / step)) > 1e-9:
            raise ValueError("angular_step must divide 360")

    @property
    def poses_per_ring(self) -> int:
        return int(round(360.0 / self.angular_step))


@dataclass(frozen=True)
class Candidate:
    pose: Pose
    ring: int
    angle_deg: float
    index: int


@dataclass
class CandidateSet:
    candidates: list[Candidate] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.candidates)

    def __iter__(self):
        return iter(self.candidates)

    def __getitem__(self, i) -> Candidate:
        return self.candidates[i]

    @property
    def poses(self) -> list[Pose]:
        return [c.pose for c in self.candidates]

    def positions(self) -> np.ndarray:
        return np.array([c.pose.position for c in self.candidates]).reshape(len(self), 3)


def generate_candidates(stats: CloudStats, cfg: CandidateConfig = CandidateConfig()) -> CandidateSet:
    """Deterministic ring candidates for the given predicted-cloud stats.

    Ring 1 sits at centroid height with the mid radius; rings 2 (above) and
    3 (below) use the outer radius at +/- the height offset. Order is ring 1,
    2, 3 with ascending angle; that order defines the tie-break index.
    """
    if stats.d_max <= 0:
        raise DegenerateObjectError("candidate rings require d_max > 0")
    centroid = np.asarray(stats.centroid, dtype=np.float64)
    z_off = cfg.height_offset_scale * stats.z_range
    rings = [
        (1, cfg.mid_radius_scale * stats.d_max, centroid[2]),
        (2, cfg.outer_radius_scale * stats.d_max, centroid[2] + z_off),
        (3, cfg.outer_radius_scale * stats.d_max, centroid[2] - z_off),
    ]
    angles = np.arange(cfg.poses_per_ring) * cfg.angular_step
    out = []
    index = 0
    for ring, radius, z in rings:
        for angle in angles:
            rad = np.radians(angle)
            position = np.array(
                [centroid[0] + radius * np.cos(rad), centroid[1] + radius * np.sin(rad), z]
            )
            facing = unit_vector(centroid - position)
            out.append(Candidate(pose=Pose(position, facing), ring=ring, angle_deg=float(angle), index=index))
            index += 1
    return CandidateSet(out)


def feasible_mask(cset: CandidateSet, world) -> np.ndarray:
    """Candidates inside world bounds and outside the inflated collision volume.

    Infeasible poses stay in the set (its size is canonical); planners skip
    them via this mask.
    """
    if len(cset) == 0:
        return np.zeros(0, dtype=bool)
    positions = cset.positions()
    return world.points_free(positions)


def visited_mask(cset: CandidateSet, visited_positions, tol: float = 1e-3) -> np.ndarray:
    """True where a candidate is within ``tol`` of a previously visited position."""
    positions = cset.positions()
    mask = np.zeros(len(cset), dtype=bool)
    for past in visited_positions:
        mask |= np.linalg.norm(positions - np.asarray(past, dtype=np.float64), axis=1) <= tol
    return mask
