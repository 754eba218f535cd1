"""Point cloud primitives: voxel filtering, rigid transforms, dedup, stats.

Clouds are plain ``(N, 3)`` float64 arrays in meters. Voxel keys are the
integer triple ``floor(p / leaf)`` per axis, anchored at the world origin;
they are the unit of deduplication and of all point counting.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

# Voxel keys are packed into a single int64 (21 bits per axis) so that key
# sets can live in sorted numpy arrays instead of Python sets.
_KEY_BITS = 21
_KEY_OFFSET = 1 << (_KEY_BITS - 1)
_KEY_SPAN = 1 << _KEY_BITS


def as_cloud(points) -> np.ndarray:
    """Coerce to an (N, 3) float64 array, rejecting NaN/Inf coordinates."""
    cloud = np.asarray(points, dtype=np.float64)
    if cloud.size == 0:
        return cloud.reshape(0, 3)
    if cloud.ndim == 1:
        cloud = cloud.reshape(1, -1)
    if cloud.ndim != 2 or cloud.shape[1] != 3:
        raise ValueError(f"expected (N, 3) points, got shape {cloud.shape}")
    if not np.isfinite(cloud).all():
        raise ValueError("point cloud contains non-finite coordinates")
    return cloud


def unit_vector(v) -> np.ndarray:
    v = np.asarray(v, dtype=np.float64)
    norm = float(np.linalg.norm(v))
    if norm < 1e-12:
        raise ValueError("cannot normalize a near-zero vector")
    return v / norm


@dataclass(frozen=True)
class Pose:
    """Sensor position plus a unit facing direction."""

    position: np.ndarray
    facing: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "position", np.asarray(self.position, dtype=np.float64).reshape(3))
        facing = np.asarray(self.facing, dtype=np.float64).reshape(3)
        if abs(np.linalg.norm(facing) - 1.0) > 1e-6:
            raise ValueError("facing must be a unit vector (|facing| = 1 within 1e-6)")
        object.__setattr__(self, "facing", facing)
        if not (np.isfinite(self.position).all() and np.isfinite(facing).all()):
            raise ValueError("pose contains non-finite values")

    @classmethod
    def aimed_at(cls, position, target) -> "Pose":
        """Pose at ``position`` facing toward ``target``."""
        position = np.asarray(position, dtype=np.float64)
        return cls(position, unit_vector(np.asarray(target, dtype=np.float64) - position))


@dataclass(frozen=True)
class RigidTransform:
    """Proper rigid motion: orthonormal rotation (det +1) plus translation."""

    rotation: np.ndarray
    translation: np.ndarray

    def __post_init__(self):
        rot = np.asarray(self.rotation, dtype=np.float64).reshape(3, 3)
        trans = np.asarray(self.translation, dtype=np.float64).reshape(3)
        if np.abs(rot.T @ rot - np.eye(3)).max() > 1e-6:
            raise ValueError("rotation is not orthonormal within 1e-6")
        if abs(np.linalg.det(rot) - 1.0) > 1e-6:
            raise ValueError("rotation determinant must be +1 within 1e-6")
        object.__setattr__(self, "rotation", rot)
        object.__setattr__(self, "translation", trans)

    @classmethod
    def identity(cls) -> "RigidTransform":
        return cls(np.eye(3), np.zeros(3))


@dataclass(frozen=True)
class CloudStats:
    """Centroid, max centroid distance, and vertical extent of a cloud."""

    centroid: np.ndarray
    d_max: float
    z_range: float


def voxel_keys(cloud, leaf: float) -> np.ndarray:
    """Integer voxel keys floor(p / leaf), shape (N, 3) int64.

    Points exactly on a voxel boundary take the floor key, so assignment is
    total and deterministic.
    """
    if leaf <= 0:
        raise ValueError("leaf size must be positive")
    cloud = as_cloud(cloud)
    return np.floor(cloud / leaf).astype(np.int64)


def pack_keys(keys: np.ndarray) -> np.ndarray:
    """Pack (N, 3) integer voxel keys into sortable int64 scalars."""
    keys = np.asarray(keys, dtype=np.int64).reshape(-1, 3)
    if keys.size and (keys.min() < -_KEY_OFFSET or keys.max() >= _KEY_OFFSET):
        raise ValueError(f"voxel key out of packable range [-{_KEY_OFFSET}, {_KEY_OFFSET})")
    shifted = keys + _KEY_OFFSET
    return (shifted[:, 0] << (2 * _KEY_BITS)) | (shifted[:, 1] << _KEY_BITS) | shifted[:, 2]


def unpack_keys(packed: np.ndarray) -> np.ndarray:
    """Inverse of pack_keys: (N,) int64 back to (N, 3) integer keys."""
    packed = np.asarray(packed, dtype=np.int64).reshape(-1)
    mask = _KEY_SPAN - 1
    kx = (packed >> (2 * _KEY_BITS)) & mask
    ky = (packed >> _KEY_BITS) & mask
    kz = packed & mask
    return np.stack([kx, ky, kz], axis=1) - _KEY_OFFSET


def key_set(cloud, leaf: float) -> np.ndarray:
    """Sorted unique packed voxel keys of a cloud."""
    cloud = as_cloud(cloud)
    if cloud.shape[0] == 0:
        return np.empty(0, dtype=np.int64)
    return np.unique(pack_keys(voxel_keys(cloud, leaf)))


def voxel_downsample(cloud, leaf: float) -> np.ndarray:
    """Collapse the cloud to one point (the centroid) per occupied voxel.

    Output is ordered by packed voxel key, so the result is independent of
    the input point order at the key level.
    """
    if leaf <= 0:
        raise ValueError("leaf size must be positive")
    cloud = as_cloud(cloud)
    if cloud.shape[0] == 0:
        return cloud
    packed = pack_keys(voxel_keys(cloud, leaf))
    order = np.argsort(packed, kind="stable")
    sorted_packed = packed[order]
    _, starts, counts = np.unique(sorted_packed, return_index=True, return_counts=True)
    sums = np.add.reduceat(cloud[order], starts, axis=0)
    return sums / counts[:, None]


def transform(cloud, t: RigidTransform) -> np.ndarray:
    """Apply R p + t to every point; preserves size and pairwise distances."""
    cloud = as_cloud(cloud)
    return cloud @ t.rotation.T + t.translation


def merge_unique(clouds, resolution: float) -> np.ndarray:
    """Deduplicating union: voxel-downsample the concatenation of the inputs.

    Idempotent, commutative, and associative at the voxel-key-set level.
    """
    if resolution <= 0:
        raise ValueError("resolution must be positive")
    parts = [as_cloud(c) for c in clouds]
    parts = [c for c in parts if c.shape[0] > 0]
    if not parts:
        return np.empty((0, 3), dtype=np.float64)
    return voxel_downsample(np.concatenate(parts, axis=0), resolution)


def cloud_stats(cloud) -> CloudStats:
    """Centroid, max distance from centroid, and z extent of a non-empty cloud."""
    cloud = as_cloud(cloud)
    if cloud.shape[0] == 0:
        raise ValueError("cloud_stats requires a non-empty cloud")
    centroid = cloud.mean(axis=0)
    d_max = float(np.linalg.norm(cloud - centroid, axis=1).max())
    z_range = float(cloud[:, 2].max() - cloud[:, 2].min())
    return CloudStats(centroid=centroid, d_max=d_max, z_range=z_range)
