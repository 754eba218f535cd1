"""Pluggable shape completion: map a partial object cloud to a full-object guess.

Three built-in predictors bracket what a learned completion network would
provide: ``oracle`` returns the ground truth (upper bound), ``passthrough``
returns the input (lower bound, planning without prediction), and
``mirror_symmetry`` exploits the bilateral symmetry of typical inspection
targets. An external command hook allows a real network to be slotted in via
PLY file exchange.
"""
from __future__ import annotations

import subprocess
import tempfile
from dataclasses import dataclass
from enum import Enum
from pathlib import Path

import numpy as np

from .errors import MapNbvError
from .geometry import as_cloud, merge_unique
from .meshio import load_mesh, write_ply_cloud


class PredictorKind(str, Enum):
    ORACLE = "oracle"
    PASSTHROUGH = "passthrough"
    MIRROR_SYMMETRY = "mirror_symmetry"
    EXTERNAL = "external"


@dataclass(frozen=True)
class Prediction:
    cloud: np.ndarray
    kind: PredictorKind


def mirror_plane(partial) -> tuple[np.ndarray, np.ndarray]:
    """Vertical mirror plane of a cloud: point on plane and unit normal.

    The plane passes through the centroid and contains the principal
    horizontal axis (dominant eigenvector of the xy covariance), so its
    normal is the minor horizontal direction. An isotropic xy covariance
    ties to the x principal axis, i.e. a normal of +y.
    """
    cloud = as_cloud(partial)
    if cloud.shape[0] == 0:
        raise ValueError("mirror plane requires a non-empty cloud")
    centroid = cloud.mean(axis=0)
    xy = cloud[:, :2] - centroid[:2]
    cov = xy.T @ xy / max(cloud.shape[0], 1)
    eigvals, eigvecs = np.linalg.eigh(cov)
    if abs(eigvals[1] - eigvals[0]) <= 1e-12 * max(abs(eigvals[1]), 1e-30):
        axis2d = np.array([1.0, 0.0])
    else:
        axis2d = eigvecs[:, int(np.argmax(eigvals))]
    normal2d = np.array([-axis2d[1], axis2d[0]])
    if normal2d[1] < 0 or (normal2d[1] == 0 and normal2d[0] < 0):
        normal2d = -normal2d
    normal = np.array([normal2d[0], normal2d[1], 0.0])
    return centroid, normal / np.linalg.norm(normal)


def reflect(cloud, point_on_plane, normal) -> np.ndarray:
    cloud = as_cloud(cloud)
    normal = np.asarray(normal, dtype=np.float64)
    offsets = (cloud - point_on_plane) @ normal
    return cloud - 2.0 * offsets[:, None] * normal


def predict(
    kind: PredictorKind,
    partial,
    scene=None,
    resolution: float | None = None,
) -> Prediction:
    """Run the selected predictor on a non-empty partial cloud.

    The oracle kind needs the scene (it returns the true object cloud); the
    mirror kind needs the dedup ``resolution`` for its reflect-and-union.
    """
    kind = PredictorKind(kind)
    partial = as_cloud(partial)
    if partial.shape[0] == 0:
        raise ValueError("predict requires a non-empty partial cloud")

    if kind is PredictorKind.ORACLE:
        if scene is None:
            raise ValueError("oracle predictor requires the scene")
        return Prediction(cloud=scene.object_cloud.copy(), kind=kind)
    if kind is PredictorKind.PASSTHROUGH:
        return Prediction(cloud=partial.copy(), kind=kind)
    if kind is PredictorKind.MIRROR_SYMMETRY:
        if resolution is None or resolution <= 0:
            raise ValueError("mirror_symmetry predictor requires a positive dedup resolution")
        centroid, normal = mirror_plane(partial)
        mirrored = reflect(partial, centroid, normal)
        return Prediction(cloud=merge_unique([partial, mirrored], resolution), kind=kind)
    raise ValueError("external predictions go through run_external_predictor")


def run_external_predictor(command: str, partial, workdir=None) -> Prediction:
    """File-exchange hook: write in.ply, run the command, read out.ply."""
    partial = as_cloud(partial)
    if partial.shape[0] == 0:
        raise ValueError("predict requires a non-empty partial cloud")
    with tempfile.TemporaryDirectory(dir=workdir) as tmp:
        tmp = Path(tmp)
        write_ply_cloud(tmp / "in.ply", partial)
        result = subprocess.run(command, shell=True, cwd=tmp, capture_output=True, text=True)
        if result.returncode != 0:
            raise MapNbvError(
                f"external predictor failed (exit {result.returncode}): {result.stderr.strip()}"
            )
        out_path = tmp / "out.ply"
        if not out_path.exists():
            raise MapNbvError("external predictor did not write out.ply")
        tris_or_cloud = _read_ply_points(out_path)
    return Prediction(cloud=tris_or_cloud, kind=PredictorKind.EXTERNAL)


def _read_ply_points(path) -> np.ndarray:
    # Reuse the mesh PLY parser's vertex handling by accepting face-less files.
    from .errors import MeshParseError

    try:
        tris = load_mesh(path)
        return np.unique(tris.reshape(-1, 3), axis=0)
    except MeshParseError:
        pass
    # Vertex-only PLY: parse header + ascii rows directly.
    lines = Path(path).read_text().splitlines()
    try:
        n = next(int(l.split()[2]) for l in lines if l.startswith("element vertex"))
        start = lines.index("end_header") + 1
        pts = [tuple(float(x) for x in lines[i].split()[:3]) for i in range(start, start + n)]
    except (StopIteration, ValueError, IndexError) as exc:
        raise MapNbvError(f"could not parse predictor output {path}: {exc}") from exc
    return as_cloud(pts)
