"""Which points of a cloud can be seen from a viewpoint.

Combines a frustum/range gate with hidden point removal (spherical flipping
plus a convex hull). A triangle-mesh ray-casting routine is included as the
independent oracle the tests compare against.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial import ConvexHull, QhullError

from .geometry import Pose, as_cloud

# Points closer than this to the viewpoint make the flip singular.
_MIN_VIEW_DISTANCE = 1e-9


@dataclass(frozen=True)
class SensorModel:
    """Pinhole-style field of view and range limits, angles in degrees."""

    horizontal_fov: float = 90.0
    vertical_fov: float = 60.0
    min_range: float = 0.5
    max_range: float = 60.0

    def __post_init__(self):
        for name in ("horizontal_fov", "vertical_fov"):
            fov = getattr(self, name)
            if not 0.0 < fov < 180.0:
                raise ValueError(f"{name} must be in (0, 180) degrees")
        if not 0.0 <= self.min_range < self.max_range:
            raise ValueError("ranges must satisfy 0 <= min_range < max_range")


def camera_frame(facing: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Right/up axes for a camera looking along ``facing``.

    Camera up is world +z projected off the view axis; when the view axis is
    near vertical, world +x takes over as the up hint.
    """
    facing = np.asarray(facing, dtype=np.float64)
    up_hint = np.array([0.0, 0.0, 1.0])
    if abs(facing @ up_hint) > 0.999:
        up_hint = np.array([1.0, 0.0, 0.0])
    right = np.cross(facing, up_hint)
    right /= np.linalg.norm(right)
    up = np.cross(right, facing)
    return right, up


def hidden_point_removal(cloud, viewpoint, radius_exponent: float = 3.0) -> np.ndarray:
    """Indices of points visible from ``viewpoint`` by spherical flipping.

    Each point p is flipped to p + 2(R - |p - v|)(p - v)/|p - v| with
    R = 10**radius_exponent times the farthest point distance; exactly the
    points whose flipped images land on the convex hull of the flipped set
    plus the viewpoint are visible. Fewer than four non-degenerate points
    cannot self-occlude, so degenerate hulls fall back to all-visible.

    Returns sorted indices into ``cloud``; invariant under input permutation
    (points are canonically sorted by (x, y, z) before the hull).
    """
    cloud = as_cloud(cloud)
    if cloud.shape[0] == 0:
        raise ValueError("hidden_point_removal requires a non-empty cloud")
    viewpoint = np.asarray(viewpoint, dtype=np.float64).reshape(3)

    rel = cloud - viewpoint
    dist = np.linalg.norm(rel, axis=1)
    if dist.min() < _MIN_VIEW_DISTANCE:
        raise ValueError("viewpoint coincides with a cloud point")

    n = cloud.shape[0]
    if n < 4:
        return np.arange(n)

    # Canonical order makes the hull output independent of input order.
    order = np.lexsort((cloud[:, 2], cloud[:, 1], cloud[:, 0]))
    radius = float(dist.max()) * 10.0 ** radius_exponent
    flipped = rel[order] * ((2.0 * radius - dist[order]) / dist[order])[:, None]

    try:
        hull = ConvexHull(np.vstack([flipped, np.zeros(3)]))
    except QhullError:
        return np.arange(n)
    on_hull = hull.vertices[hull.vertices < n]
    return np.sort(order[on_hull])


def sensor_gate(cloud, pose: Pose, sensor: SensorModel) -> np.ndarray:
    """Indices of points inside the sensor's range band and view frustum."""
    cloud = as_cloud(cloud)
    if cloud.shape[0] == 0:
        return np.empty(0, dtype=np.int64)
    right, up = camera_frame(pose.facing)
    rel = cloud - pose.position
    dist = np.linalg.norm(rel, axis=1)
    forward = rel @ pose.facing
    tan_h = np.tan(np.radians(sensor.horizontal_fov) / 2.0)
    tan_v = np.tan(np.radians(sensor.vertical_fov) / 2.0)
    keep = (
        (dist >= sensor.min_range)
        & (dist <= sensor.max_range)
        & (forward > 0.0)
        & (np.abs(rel @ right) <= tan_h * forward)
        & (np.abs(rel @ up) <= tan_v * forward)
    )
    return np.flatnonzero(keep)


def visible_points(cloud, pose: Pose, sensor: SensorModel, radius_exponent: float = 3.0) -> np.ndarray:
    """Gate by the sensor, then run hidden point removal on the gated subset.

    Returns sorted indices into the original cloud; empty when nothing
    survives the gate.
    """
    cloud = as_cloud(cloud)
    gated = sensor_gate(cloud, pose, sensor)
    if gated.size == 0:
        return gated
    kept = hidden_point_removal(cloud[gated], pose.position, radius_exponent)
    return gated[kept]


def raycast_visibility(triangles, sample, viewpoint, rel_tol: float = 1e-6) -> np.ndarray:
    """Test-oracle visibility by segment/triangle intersection.

    A sample point is visible iff the segment viewpoint -> point hits no
    triangle strictly before the point (parameter t < 1 - rel_tol). An empty
    mesh occludes nothing. Returns sorted indices into ``sample``.
    """
    sample = as_cloud(sample)
    viewpoint = np.asarray(viewpoint, dtype=np.float64).reshape(3)
    tris = np.asarray(triangles, dtype=np.float64).reshape(-1, 3, 3)
    if tris.shape[0] == 0:
        return np.arange(sample.shape[0])

    v0 = tris[:, 0]
    e1 = tris[:, 1] - v0
    e2 = tris[:, 2] - v0

    visible = np.ones(sample.shape[0], dtype=bool)
    for i, point in enumerate(sample):
        direction = point - viewpoint
        # Moller-Trumbore for one segment against all triangles.
        pvec = np.cross(direction, e2)
        det = np.einsum("ij,ij->i", e1, pvec)
        ok = np.abs(det) > 1e-12
        if not ok.any():
            continue
        inv_det = np.where(ok, 1.0 / np.where(ok, det, 1.0), 0.0)
        tvec = viewpoint - v0
        u = np.einsum("ij,ij->i", tvec, pvec) * inv_det
        qvec = np.cross(tvec, e1)
        vv = np.dot(qvec, direction) * inv_det
        t = np.einsum("ij,ij->i", e2, qvec) * inv_det
        hit = ok & (u >= -1e-12) & (vv >= -1e-12) & (u + vv <= 1.0 + 1e-12)
        hit &= (t > 1e-9) & (t < 1.0 - rel_tol)
        if hit.any():
            visible[i] = False
    return np.flatnonzero(visible)
