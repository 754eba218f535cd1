"""Triangle mesh loading (OBJ / PLY / OFF), surface sampling, and PLY export."""
from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from .errors import DegenerateMeshError, MeshParseError
from .geometry import as_cloud


def load_mesh(path) -> np.ndarray:
    """Load a triangle mesh as an (M, 3, 3) float array of vertex triples.

    Supports Wavefront OBJ, PLY (ascii and binary little-endian), and OFF.
    Polygonal faces are fan-triangulated. Raises MeshParseError with file and
    line/offset context on malformed input.
    """
    path = Path(path)
    if not path.exists():
        raise MeshParseError(f"{path}: no such file")
    suffix = path.suffix.lower()
    if suffix == ".obj":
        return _load_obj(path)
    if suffix == ".ply":
        return _load_ply(path)
    if suffix == ".off":
        return _load_off(path)
    raise MeshParseError(f"{path}: unsupported mesh format '{suffix}'")


def _triangulate(vertices: np.ndarray, faces: list[list[int]], path: Path) -> np.ndarray:
    tris = []
    for face in faces:
        if len(face) < 3:
            raise MeshParseError(f"{path}: face with fewer than 3 vertices")
        for k in range(1, len(face) - 1):
            tris.append([face[0], face[k], face[k + 1]])
    if not tris:
        raise MeshParseError(f"{path}: mesh contains no faces")
    idx = np.asarray(tris, dtype=np.int64)
    if idx.min() < 0 or idx.max() >= len(vertices):
        raise MeshParseError(f"{path}: face index out of range")
    tris_arr = vertices[idx]
    if not np.isfinite(tris_arr).all():
        raise MeshParseError(f"{path}: non-finite vertex coordinates")
    return tris_arr


def _load_obj(path: Path) -> np.ndarray:
    vertices = []
    faces = []
    for lineno, raw in enumerate(path.read_text().splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        try:
            if parts[0] == "v":
                if len(parts) < 4:
                    raise ValueError("vertex line needs 3 coordinates")
                vertices.append([float(x) for x in parts[1:4]])
            elif parts[0] == "f":
                # OBJ face tokens may be v, v/vt, v/vt/vn; indices are 1-based
                # (negative = relative to end).
                face = []
                for token in parts[1:]:
                    i = int(token.split("/")[0])
                    face.append(i - 1 if i > 0 else len(vertices) + i)
                faces.append(face)
        except (ValueError, IndexError) as exc:
            raise MeshParseError(f"{path}:{lineno}: {exc}") from exc
    if not vertices:
        raise MeshParseError(f"{path}: no vertices found")
    return _triangulate(np.asarray(vertices, dtype=np.float64), faces, path)


def _load_off(path: Path) -> np.ndarray:
    tokens = []
    for lineno, raw in enumerate(path.read_text().splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if line:
            tokens.extend((lineno, tok) for tok in line.split())
    if not tokens or tokens[0][1] != "OFF":
        raise MeshParseError(f"{path}: missing OFF header")
    pos = 1

    def take(n):
        nonlocal pos
        if pos + n > len(tokens):
            lineno = tokens[-1][0] if tokens else 0
            raise MeshParseError(f"{path}:{lineno}: truncated OFF data")
        out = tokens[pos : pos + n]
        pos += n
        return out

    try:
        counts = take(3)
        nv, nf = int(counts[0][1]), int(counts[1][1])
        vertices = np.array(
            [[float(t[1]) for t in take(3)] for _ in range(nv)], dtype=np.float64
        ).reshape(nv, 3)
        faces = []
        for _ in range(nf):
            k = int(take(1)[0][1])
            faces.append([int(t[1]) for t in take(k)])
    except ValueError as exc:
        raise MeshParseError(f"{path}: {exc}") from exc
    return _triangulate(vertices, faces, path)


def _load_ply(path: Path) -> np.ndarray:
    data = path.read_bytes()
    header_end = data.find(b"end_header\n")
    if not data.startswith(b"ply") or header_end < 0:
        raise MeshParseError(f"{path}: not a PLY file (missing header)")
    header = data[:header_end].decode("ascii", errors="replace").splitlines()
    body = data[header_end + len(b"end_header\n") :]

    fmt = None
    elements = []  # (name, count, [(proptype, name)] )
    for lineno, line in enumerate(header, start=1):
        parts = line.split()
        if not parts:
            continue
        if parts[0] == "format":
            fmt = parts[1]
        elif parts[0] == "element":
            elements.append((parts[1], int(parts[2]), []))
        elif parts[0] == "property":
            if not elements:
                raise MeshParseError(f"{path}:{lineno}: property before element")
            if parts[1] == "list":
                elements[-1][2].append(("list", parts[2], parts[3], parts[4]))
            else:
                elements[-1][2].append(("scalar", parts[1], parts[2]))
    if fmt not in ("ascii", "binary_little_endian"):
        raise MeshParseError(f"{path}: unsupported PLY format '{fmt}'")

    if fmt == "ascii":
        return _parse_ply_ascii(path, body, elements)
    return _parse_ply_binary(path, body, elements)


_PLY_STRUCT = {
    "char": "b", "int8": "b", "uchar": "B", "uint8": "B",
    "short": "h", "int16": "h", "ushort": "H", "uint16": "H",
    "int": "i", "int32": "i", "uint": "I", "uint32": "I",
    "float": "f", "float32": "f", "double": "d", "float64": "d",
}


def _parse_ply_ascii(path, body, elements):
    tokens = body.decode("ascii", errors="replace").split()
    pos = 0
    vertices = None
    faces = []

    def take(n):
        nonlocal pos
        if pos + n > len(tokens):
            raise MeshParseError(f"{path}: truncated PLY body at token {pos}")
        out = tokens[pos : pos + n]
        pos += n
        return out

    try:
        for name, count, props in elements:
            if name == "vertex":
                cols = [p[2] for p in props if p[0] == "scalar"]
                rows = np.array(
                    [[float(x) for x in take(len(cols))] for _ in range(count)]
                ).reshape(count, len(cols))
                vertices = rows[:, [cols.index("x"), cols.index("y"), cols.index("z")]]
            elif name == "face":
                for _ in range(count):
                    k = int(take(1)[0])
                    faces.append([int(x) for x in take(k)])
            else:
                width = sum(1 for p in props if p[0] == "scalar")
                take(width * count)
    except ValueError as exc:
        raise MeshParseError(f"{path}: {exc}") from exc
    if vertices is None:
        raise MeshParseError(f"{path}: PLY has no vertex element")
    return _triangulate(np.asarray(vertices, dtype=np.float64), faces, path)


def _parse_ply_binary(path, body, elements):
    offset = 0
    vertices = None
    faces = []
    for name, count, props in elements:
        if name == "vertex":
            fmt = "<" + "".join(_PLY_STRUCT[p[1]] for p in props if p[0] == "scalar")
            names = [p[2] for p in props if p[0] == "scalar"]
            size = struct.calcsize(fmt)
            rows = []
            for _ in range(count):
                if offset + size > len(body):
                    raise MeshParseError(f"{path}: truncated PLY body at offset {offset}")
                rows.append(struct.unpack_from(fmt, body, offset))
                offset += size
            arr = np.asarray(rows, dtype=np.float64).reshape(count, len(names))
            vertices = arr[:, [names.index("x"), names.index("y"), names.index("z")]]
        elif name == "face":
            list_prop = next(p for p in props if p[0] == "list")
            count_fmt = "<" + _PLY_STRUCT[list_prop[1]]
            item_code = _PLY_STRUCT[list_prop[2]]
            count_size = struct.calcsize(count_fmt)
            for _ in range(count):
                if offset + count_size > len(body):
                    raise MeshParseError(f"{path}: truncated PLY body at offset {offset}")
                (k,) = struct.unpack_from(count_fmt, body, offset)
                offset += count_size
                items_fmt = "<" + item_code * k
                items_size = struct.calcsize(items_fmt)
                if offset + items_size > len(body):
                    raise MeshParseError(f"{path}: truncated PLY body at offset {offset}")
                faces.append(list(struct.unpack_from(items_fmt, body, offset)))
                offset += items_size
        else:
            fmt = "<" + "".join(_PLY_STRUCT[p[1]] for p in props if p[0] == "scalar")
            offset += struct.calcsize(fmt) * count
    if vertices is None:
        raise MeshParseError(f"{path}: PLY has no vertex element")
    return _triangulate(vertices, faces, path)


def triangle_areas(triangles) -> np.ndarray:
    tris = np.asarray(triangles, dtype=np.float64).reshape(-1, 3, 3)
    cross = np.cross(tris[:, 1] - tris[:, 0], tris[:, 2] - tris[:, 0])
    return 0.5 * np.linalg.norm(cross, axis=1)


def sample_surface(triangles, target_count: int, seed: int) -> np.ndarray:
    """Area-weighted uniform surface sampling, exactly ``target_count`` points.

    Deterministic for a fixed seed.
    """
    tris = np.asarray(triangles, dtype=np.float64).reshape(-1, 3, 3)
    if target_count < 0:
        raise ValueError("target_count must be non-negative")
    areas = triangle_areas(tris)
    total = float(areas.sum())
    if tris.shape[0] == 0 or total <= 0.0:
        raise DegenerateMeshError("mesh has zero total surface area")
    rng = np.random.default_rng(seed)
    face_idx = rng.choice(len(tris), size=target_count, p=areas / total)
    u = np.sqrt(rng.random(target_count))
    v = rng.random(target_count)
    a, b, c = tris[face_idx, 0], tris[face_idx, 1], tris[face_idx, 2]
    return (1 - u)[:, None] * a + (u * (1 - v))[:, None] * b + (u * v)[:, None] * c


def write_obj(path, vertices, faces) -> None:
    """Write a simple OBJ mesh (1-based face indices)."""
    vertices = np.asarray(vertices, dtype=np.float64).reshape(-1, 3)
    lines = [f"v {x:.8f} {y:.8f} {z:.8f}" for x, y, z in vertices]
    lines += ["f " + " ".join(str(i + 1) for i in face) for face in faces]
    Path(path).write_text("\n".join(lines) + "\n")


def write_ply_cloud(path, cloud) -> None:
    """Write a point cloud as ascii PLY with fixed 8-decimal formatting."""
    cloud = as_cloud(cloud)
    lines = [
        "ply",
        "format ascii 1.0",
        f"element vertex {cloud.shape[0]}",
        "property float x",
        "property float y",
        "property float z",
        "end_header",
    ]
    lines += [f"{x:.8f} {y:.8f} {z:.8f}" for x, y, z in cloud]
    Path(path).write_text("\n".join(lines) + "\n")


def write_ply_polylines(path, polylines) -> None:
    """Write one PLY edge set per polyline (trajectory export)."""
    polylines = [np.asarray(p, dtype=np.float64).reshape(-1, 3) for p in polylines]
    n_vertices = sum(p.shape[0] for p in polylines)
    n_edges = sum(max(p.shape[0] - 1, 0) for p in polylines)
    lines = [
        "ply",
        "format ascii 1.0",
        f"element vertex {n_vertices}",
        "property float x",
        "property float y",
        "property float z",
        f"element edge {n_edges}",
        "property int vertex1",
        "property int vertex2",
        "end_header",
    ]
    for poly in polylines:
        lines += [f"{x:.8f} {y:.8f} {z:.8f}" for x, y, z in poly]
    base = 0
    for poly in polylines:
        lines += [f"{base + i} {base + i + 1}" for i in range(poly.shape[0] - 1)]
        base += poly.shape[0]
    Path(path).write_text("\n".join(lines) + "\n")
