"""Procedural test objects and scene assembly.

Ten bundled meshes in five families (plane, rocket, tower, boat, convex
blob), all bilaterally symmetric or convex, sized around a meter so the
default sensor and ring radii work out of the box.
"""
from __future__ import annotations

import numpy as np
from scipy.spatial import ConvexHull

from .geometry import cloud_stats, voxel_downsample
from .meshio import sample_surface, write_obj
from .scene import Box, Scene

DEFAULT_SURFACE_POINTS = 6000
DEFAULT_DEDUP_FACTOR = 0.0125
DEFAULT_BOUNDS_SCALE = 4.0


def _quad(a, b, c, d):
    return [[a, b, c], [a, c, d]]


def box_triangles(center, size) -> np.ndarray:
    center = np.asarray(center, dtype=np.float64)
    half = np.asarray(size, dtype=np.float64) / 2.0
    signs = np.array([[sx, sy, sz] for sx in (-1, 1) for sy in (-1, 1) for sz in (-1, 1)])
    corners = center + signs * half
    faces = [
        (0, 1, 3, 2), (4, 6, 7, 5),  # x faces
        (0, 4, 5, 1), (2, 3, 7, 6),  # y faces
        (0, 2, 6, 4), (1, 5, 7, 3),  # z faces
    ]
    tris = []
    for f in faces:
        tris += _quad(*f)
    return corners[np.asarray(tris)]


def _circle_frame(axis):
    axis = np.asarray(axis, dtype=np.float64)
    axis = axis / np.linalg.norm(axis)
    helper = np.array([0.0, 0.0, 1.0]) if abs(axis[2]) < 0.9 else np.array([1.0, 0.0, 0.0])
    u = np.cross(axis, helper)
    u /= np.linalg.norm(u)
    v = np.cross(axis, u)
    return u, v


def cylinder_triangles(p0, p1, radius, segments: int = 24) -> np.ndarray:
    p0 = np.asarray(p0, dtype=np.float64)
    p1 = np.asarray(p1, dtype=np.float64)
    u, v = _circle_frame(p1 - p0)
    angles = np.linspace(0.0, 2.0 * np.pi, segments, endpoint=False)
    ring = np.cos(angles)[:, None] * u + np.sin(angles)[:, None] * v
    bottom = p0 + radius * ring
    top = p1 + radius * ring
    tris = []
    for i in range(segments):
        j = (i + 1) % segments
        tris += [[bottom[i], bottom[j], top[j]], [bottom[i], top[j], top[i]]]
        tris += [[p0, bottom[j], bottom[i]], [p1, top[i], top[j]]]
    return np.asarray(tris)


def cone_triangles(base_center, apex, radius, segments: int = 24) -> np.ndarray:
    base_center = np.asarray(base_center, dtype=np.float64)
    apex = np.asarray(apex, dtype=np.float64)
    u, v = _circle_frame(apex - base_center)
    angles = np.linspace(0.0, 2.0 * np.pi, segments, endpoint=False)
    ring = base_center + radius * (np.cos(angles)[:, None] * u + np.sin(angles)[:, None] * v)
    tris = []
    for i in range(segments):
        j = (i + 1) % segments
        tris += [[ring[i], ring[j], apex], [base_center, ring[j], ring[i]]]
    return np.asarray(tris)


def ellipsoid_triangles(center, radii, n_theta: int = 16, n_phi: int = 24) -> np.ndarray:
    center = np.asarray(center, dtype=np.float64)
    radii = np.asarray(radii, dtype=np.float64)
    thetas = np.linspace(0.0, np.pi, n_theta + 1)
    phis = np.linspace(0.0, 2.0 * np.pi, n_phi, endpoint=False)
    grid = np.zeros((n_theta + 1, n_phi, 3))
    for i, th in enumerate(thetas):
        for j, ph in enumerate(phis):
            grid[i, j] = center + radii * np.array(
                [np.sin(th) * np.cos(ph), np.sin(th) * np.sin(ph), np.cos(th)]
            )
    tris = []
    for i in range(n_theta):
        for j in range(n_phi):
            k = (j + 1) % n_phi
            a, b, c, d = grid[i, j], grid[i, k], grid[i + 1, k], grid[i + 1, j]
            if i > 0:
                tris.append([a, b, c])
            if i < n_theta - 1:
                tris.append([a, c, d])
    return np.asarray(tris)


def convex_blob_triangles(seed: int, radii=(1.1, 0.9, 0.7), n_points: int = 48) -> np.ndarray:
    rng = np.random.default_rng(seed)
    directions = rng.normal(size=(n_points, 3))
    directions /= np.linalg.norm(directions, axis=1, keepdims=True)
    scale = 0.7 + 0.3 * rng.random(n_points)
    points = directions * scale[:, None] * np.asarray(radii)
    hull = ConvexHull(points)
    return points[hull.simplices]


def _plane(fuselage_len, fuselage_r, span, chord, tail_span) -> np.ndarray:
    half = fuselage_len / 2.0
    parts = [
        cylinder_triangles([-half, 0, 0], [half, 0, 0], fuselage_r),
        cone_triangles([half, 0, 0], [half + 2.2 * fuselage_r, 0, 0], fuselage_r),
        box_triangles([0.1 * half, 0, 0], [chord, span, 0.05]),
        box_triangles([-0.88 * half, 0, 0], [0.6 * chord, tail_span, 0.04]),
        box_triangles([-0.9 * half, 0, 0.27 * fuselage_len * 0.25], [0.5 * chord, 0.04, 0.45 * span * 0.25]),
    ]
    return np.concatenate(parts)


def _rocket(height, radius, fin_span) -> np.ndarray:
    body_top = 0.55 * height
    parts = [
        cylinder_triangles([0, 0, -0.45 * height], [0, 0, body_top], radius),
        cone_triangles([0, 0, body_top], [0, 0, 0.55 * height + 0.35 * height], radius),
        box_triangles([0, 0, -0.38 * height], [fin_span, 0.04, 0.22 * height]),
        box_triangles([0, 0, -0.38 * height], [0.04, fin_span, 0.22 * height]),
    ]
    return np.concatenate(parts)


def _tower(base, taper, levels, level_height) -> np.ndarray:
    parts = []
    z = -0.5 * levels * level_height
    width = base
    for _ in range(levels):
        parts.append(box_triangles([0, 0, z + level_height / 2.0], [width, width, level_height]))
        z += level_height
        width *= taper
    parts.append(cone_triangles([0, 0, z], [0, 0, z + 1.2 * level_height], width / 2.0))
    return np.concatenate(parts)


def _boat(length, beam, depth) -> np.ndarray:
    half_l, half_b = length / 2.0, beam / 2.0
    deck = depth / 2.0
    keel = -depth / 2.0
    hull_points = np.array(
        [
            [-half_l, -half_b, deck], [-half_l, half_b, deck],
            [-half_l, -half_b * 0.7, keel], [-half_l, half_b * 0.7, keel],
            [half_l * 0.45, -half_b, deck], [half_l * 0.45, half_b, deck],
            [half_l * 0.45, -half_b * 0.7, keel], [half_l * 0.45, half_b * 0.7, keel],
            [half_l, 0.0, deck], [half_l * 0.8, 0.0, keel],
        ]
    )
    hull = ConvexHull(hull_points)
    parts = [
        hull_points[hull.simplices],
        box_triangles([-half_l * 0.3, 0, deck + 0.12 * depth], [length * 0.3, beam * 0.6, depth * 0.6]),
        cylinder_triangles([half_l * 0.15, 0, deck], [half_l * 0.15, 0, deck + depth * 1.6], 0.02 * length, segments=12),
    ]
    return np.concatenate(parts)


BUNDLED_SCENES = {
    "plane_a": lambda: _plane(2.2, 0.16, 2.4, 0.5, 0.9),
    "plane_b": lambda: _plane(1.8, 0.20, 2.0, 0.62, 0.8),
    "rocket_a": lambda: _rocket(2.0, 0.22, 0.9),
    "rocket_b": lambda: _rocket(2.4, 0.16, 0.7),
    "tower_a": lambda: _tower(0.9, 0.72, 3, 0.55),
    "tower_b": lambda: _tower(1.1, 0.6, 4, 0.42),
    "boat_a": lambda: _boat(2.2, 0.8, 0.5),
    "boat_b": lambda: _boat(1.8, 1.0, 0.62),
    "blob_a": lambda: convex_blob_triangles(seed=7),
    "blob_b": lambda: convex_blob_triangles(seed=8, radii=(0.9, 1.1, 0.8)),
}


def generate_scene_meshes(out_dir) -> list[str]:
    """Write the ten bundled meshes as OBJ files; returns the paths written."""
    from pathlib import Path

    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    for name, builder in BUNDLED_SCENES.items():
        tris = builder()
        vertices = tris.reshape(-1, 3)
        faces = [(3 * i, 3 * i + 1, 3 * i + 2) for i in range(tris.shape[0])]
        path = out_dir / f"{name}.obj"
        write_obj(path, vertices, faces)
        written.append(str(path))
    return written


def build_scene(
    triangles,
    name: str = "scene",
    surface_points: int = DEFAULT_SURFACE_POINTS,
    seed: int = 0,
    obstacles=(),
    bounds_scale: float = DEFAULT_BOUNDS_SCALE,
) -> Scene:
    """Sample a mesh into a ground-truth scene.

    The surface sample is voxel-filtered at load so observed-point counts
    are comparable across planners; world bounds are a cube around the
    object sized to contain the candidate rings with room to maneuver.
    """
    samples = sample_surface(triangles, surface_points, seed)
    diagonal = float(np.linalg.norm(samples.max(axis=0) - samples.min(axis=0)))
    cloud = voxel_downsample(samples, DEFAULT_DEDUP_FACTOR * diagonal)
    stats = cloud_stats(cloud)
    half = bounds_scale * stats.d_max
    bounds = Box(stats.centroid - half, stats.centroid + half)
    return Scene(object_cloud=cloud, obstacles=list(obstacles), world_bounds=bounds, name=name)


def bundled_scene(name: str, surface_points: int = DEFAULT_SURFACE_POINTS, seed: int = 0) -> Scene:
    if name not in BUNDLED_SCENES:
        raise KeyError(f"unknown bundled scene '{name}'; choices: {sorted(BUNDLED_SCENES)}")
    return build_scene(BUNDLED_SCENES[name](), name=name, surface_points=surface_points, seed=seed)
