"""Triangle mesh representation, import/export and measurement.

Conventions used across the whole package: units are meters, Y-up,
right-handed. Meshes are validated at construction (index bounds checked,
degenerate triangles dropped) and immutable afterwards.
"""

from __future__ import annotations

import base64
import json
import logging
import os
import struct
import tempfile
from dataclasses import dataclass, field

import numpy as np

from .errors import EmptyMeshError, MeshParseError, UnsupportedFormatError

logger = logging.getLogger(__name__)

# triangles at or below this area (m^2) are dropped during validation
DEGENERATE_AREA = 1e-12

# reserved material id for cap faces created by plane slicing
CAP_MATERIAL_ID = -1


@dataclass(frozen=True, eq=False)
class TriMesh:
    """Indexed triangle mesh. Vertices in meters.

    ``materials`` is an optional per-triangle integer id; slicing tags the
    cross-section caps it creates with :data:`CAP_MATERIAL_ID`.
    """

    vertices: np.ndarray          # (n, 3) float64
    triangles: np.ndarray         # (m, 3) int64
    materials: np.ndarray | None = None   # (m,) int64
    watertight: bool = field(default=False, compare=False)
    dropped_degenerate: int = field(default=0, compare=False)

    @staticmethod
    def validate(vertices, triangles, materials=None) -> "TriMesh":
        """Build a validated mesh: checks index bounds, drops degenerate
        triangles (area <= 1e-12 m^2) with a logged count, freezes arrays
        and computes the watertightness flag."""
        vertices = np.ascontiguousarray(vertices, dtype=np.float64).reshape(-1, 3)
        triangles = np.ascontiguousarray(triangles, dtype=np.int64).reshape(-1, 3)
        if materials is not None:
            materials = np.ascontiguousarray(materials, dtype=np.int64).reshape(-1)
            if len(materials) != len(triangles):
                raise ValueError("materials length must match triangle count")

        if len(triangles) and (triangles.min() < 0 or triangles.max() >= len(vertices)):
            raise MeshParseError(
                f"triangle index out of range (have {len(vertices)} vertices)"
            )

        keep = triangle_areas(vertices, triangles) > DEGENERATE_AREA
        dropped = int(len(keep) - keep.sum())
        if dropped:
            logger.warning("dropped %d degenerate triangles", dropped)
            triangles = triangles[keep]
            if materials is not None:
                materials = materials[keep]

        for arr in (vertices, triangles, materials):
            if arr is not None:
                arr.flags.writeable = False

        return TriMesh(
            vertices=vertices,
            triangles=triangles,
            materials=materials,
            watertight=_is_watertight(triangles),
            dropped_degenerate=dropped,
        )

    def __eq__(self, other):
        if not isinstance(other, TriMesh):
            return NotImplemented
        if not (
            np.array_equal(self.vertices, other.vertices)
            and np.array_equal(self.triangles, other.triangles)
        ):
            return False
        if self.materials is None and other.materials is None:
            return True
        if self.materials is None or other.materials is None:
            return False
        return np.array_equal(self.materials, other.materials)

    def __len__(self):
        return len(self.triangles)

    @property
    def bbox(self):
        """(min_corner, max_corner) of the vertex set."""
        return self.vertices.min(axis=0), self.vertices.max(axis=0)

    @property
    def bbox_diagonal(self) -> float:
        lo, hi = self.bbox
        return float(np.linalg.norm(hi - lo))

    def triangle_centroids(self) -> np.ndarray:
        return self.vertices[self.triangles].mean(axis=1)

    def triangle_normals(self) -> np.ndarray:
        """Unit normals, right-hand rule over the vertex order."""
        tri = self.vertices[self.triangles]
        n = np.cross(tri[:, 1] - tri[:, 0], tri[:, 2] - tri[:, 0])
        lens = np.linalg.norm(n, axis=1)
        lens[lens == 0] = 1.0
        return n / lens[:, None]

    def translated(self, offset) -> "TriMesh":
        return TriMesh.validate(
            self.vertices + np.asarray(offset, dtype=np.float64),
            self.triangles,
            self.materials,
        )

    def transformed(self, rotation, offset) -> "TriMesh":
        """Apply ``v -> rotation @ v + offset`` to every vertex."""
        rot = np.asarray(rotation, dtype=np.float64)
        return TriMesh.validate(
            self.vertices @ rot.T + np.asarray(offset, dtype=np.float64),
            self.triangles,
            self.materials,
        )


@dataclass(frozen=True)
class MeshStats:
    volume: float                  # m^3; signed sum, |.| when not watertight
    surface_area: float            # m^2
    bbox_min: np.ndarray
    bbox_max: np.ndarray
    component_count: int
    watertight: bool


def triangle_areas(vertices, triangles) -> np.ndarray:
    tri = vertices[triangles]
    return 0.5 * np.linalg.norm(
        np.cross(tri[:, 1] - tri[:, 0], tri[:, 2] - tri[:, 0]), axis=1
    )


def mesh_edges(triangles) -> np.ndarray:
    """All directed edges (3 per triangle), shape (3m, 2)."""
    return np.concatenate(
        [triangles[:, [0, 1]], triangles[:, [1, 2]], triangles[:, [2, 0]]], axis=0
    )


def edge_codes(triangles) -> np.ndarray:
    """Undirected edges encoded as ``min * n + max`` int64 keys (3 per
    triangle, in directed-edge order)."""
    edges = mesh_edges(triangles)
    n = int(triangles.max()) + 1 if len(triangles) else 1
    lo = np.minimum(edges[:, 0], edges[:, 1])
    hi = np.maximum(edges[:, 0], edges[:, 1])
    return lo * n + hi


def _undirected_edge_counts(triangles):
    uniq, counts = np.unique(edge_codes(triangles), return_counts=True)
    return uniq, counts


def _is_watertight(triangles) -> bool:
    if len(triangles) == 0:
        return False
    _, counts = _undirected_edge_counts(triangles)
    return bool((counts == 2).all())


def signed_volume(vertices, triangles) -> float:
    """Sum of signed tetrahedron volumes against the origin (divergence
    theorem); exact for closed, consistently oriented surfaces."""
    tri = vertices[triangles]
    return float(np.einsum("ij,ij->i", tri[:, 0], np.cross(tri[:, 1], tri[:, 2])).sum() / 6.0)


def connected_component_labels(mesh: TriMesh) -> np.ndarray:
    """Per-triangle component label; triangles connect through shared
    undirected edges. Union-find with path compression."""
    m = len(mesh.triangles)
    parent = np.arange(m, dtype=np.int64)

    def find(i):
        root = i
        while parent[root] != root:
            root = parent[root]
        while parent[i] != root:
            parent[i], i = root, parent[i]
        return root

    codes = edge_codes(mesh.triangles)
    tri_of_edge = np.tile(np.arange(m, dtype=np.int64), 3)
    order = np.argsort(codes, kind="stable")
    codes_sorted = codes[order]
    tris_sorted = tri_of_edge[order]
    # group identical edges, union all triangles in each group
    same = codes_sorted[1:] == codes_sorted[:-1]
    for i in np.nonzero(same)[0]:
        a, b = find(tris_sorted[i]), find(tris_sorted[i + 1])
        if a != b:
            parent[max(a, b)] = min(a, b)

    roots = np.array([find(i) for i in range(m)], dtype=np.int64)
    _, labels = np.unique(roots, return_inverse=True)
    return labels


def compute_stats(mesh: TriMesh) -> MeshStats:
    """Volume, area, bbox and edge-connected component count."""
    if len(mesh.triangles) == 0:
        raise EmptyMeshError("cannot compute stats of an empty mesh")
    vol = signed_volume(mesh.vertices, mesh.triangles)
    if not mesh.watertight:
        vol = abs(vol)
    lo, hi = mesh.bbox
    labels = connected_component_labels(mesh)
    return MeshStats(
        volume=vol,
        surface_area=float(triangle_areas(mesh.vertices, mesh.triangles).sum()),
        bbox_min=lo,
        bbox_max=hi,
        component_count=int(labels.max()) + 1,
        watertight=mesh.watertight,
    )


# ---------------------------------------------------------------------------
# OBJ


def _parse_obj(path) -> TriMesh:
    vertices = []
    faces = []
    face_materials = []
    material_ids = {}     # name -> id; "cap" is pinned to the reserved id
    current_material = None
    saw_material = False

    with open(path, "r", encoding="utf-8", errors="replace") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split()
            tag = parts[0]
            if tag == "v":
                if len(parts) < 4:
                    raise MeshParseError("vertex needs 3 coordinates", path, lineno)
                try:
                    vertices.append([float(parts[1]), float(parts[2]), float(parts[3])])
                except ValueError:
                    raise MeshParseError("bad vertex coordinate", path, lineno) from None
            elif tag == "f":
                if len(parts) < 4:
                    raise MeshParseError("face needs at least 3 indices", path, lineno)
                idx = []
                for token in parts[1:]:
                    head = token.split("/")[0]
                    try:
                        i = int(head)
                    except ValueError:
                        raise MeshParseError(f"bad face index {token!r}", path, lineno) from None
                    if i < 0:
                        i = len(vertices) + i        # OBJ negative = relative
                    else:
                        i = i - 1                    # OBJ is 1-based
                    if i < 0 or i >= len(vertices):
                        raise MeshParseError(
                            f"face references vertex {head} of {len(vertices)}", path, lineno
                        )
                    idx.append(i)
                # fan-triangulate polygons
                for a, b in zip(idx[1:-1], idx[2:]):
                    faces.append([idx[0], a, b])
                    face_materials.append(current_material)
            elif tag == "usemtl":
                saw_material = True
                name = parts[1] if len(parts) > 1 else ""
                if name == "cap":
                    material_ids[name] = CAP_MATERIAL_ID
                elif name not in material_ids:
                    if name.startswith("m") and name[1:].lstrip("-").isdigit():
                        material_ids[name] = int(name[1:])
                    else:
                        used = [v for v in material_ids.values() if v >= 0]
                        material_ids[name] = max(used, default=-1) + 1
                current_material = material_ids[name]
            # vn / vt / o / g / s / mtllib are accepted and ignored

    if not faces:
        raise EmptyMeshError(f"{path}: no faces found")

    materials = None
    if saw_material:
        materials = np.array(
            [m if m is not None else 0 for m in face_materials], dtype=np.int64
        )
    return TriMesh.validate(np.array(vertices), np.array(faces, dtype=np.int64), materials)


def export_mesh(mesh: TriMesh, path) -> None:
    """Write an ASCII OBJ with shortest-round-trip float precision;
    re-import reproduces vertices and triangles exactly. Atomic
    (temp file + rename)."""
    path = os.fspath(path)
    lines = ["# idikit OBJ export\n"]
    for x, y, z in mesh.vertices.tolist():
        lines.append(f"v {x!r} {y!r} {z!r}\n")
    current = None
    for i, t in enumerate(mesh.triangles):
        if mesh.materials is not None and mesh.materials[i] != current:
            current = int(mesh.materials[i])
            name = "cap" if current == CAP_MATERIAL_ID else f"m{current}"
            lines.append(f"usemtl {name}\n")
        lines.append(f"f {t[0] + 1} {t[1] + 1} {t[2] + 1}\n")

    fd, tmp = tempfile.mkstemp(dir=os.path.dirname(path) or ".", suffix=".obj.tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.writelines(lines)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


# ---------------------------------------------------------------------------
# glTF (geometry subset: POSITION + indices of TRIANGLES primitives)

_GLTF_COMPONENT = {
    5120: ("b", 1), 5121: ("B", 1), 5122: ("h", 2),
    5123: ("H", 2), 5125: ("I", 4), 5126: ("f", 4),
}
_GLTF_ELEMENTS = {"SCALAR": 1, "VEC2": 2, "VEC3": 3, "VEC4": 4}


def _gltf_buffers(doc, path, glb_chunk):
    buffers = []
    for buf in doc.get("buffers", []):
        uri = buf.get("uri")
        if uri is None:
            if glb_chunk is None:
                raise MeshParseError("buffer without uri outside GLB", path)
            buffers.append(glb_chunk)
        elif uri.startswith("data:"):
            b64 = uri.split(",", 1)[1]
            buffers.append(base64.b64decode(b64))
        else:
            bin_path = os.path.join(os.path.dirname(os.fspath(path)), uri)
            with open(bin_path, "rb") as fh:
                buffers.append(fh.read())
    return buffers


def _read_accessor(doc, buffers, index, path):
    acc = doc["accessors"][index]
    fmt, size = _GLTF_COMPONENT[acc["componentType"]]
    per = _GLTF_ELEMENTS[acc["type"]]
    count = acc["count"]
    view = doc["bufferViews"][acc["bufferView"]]
    data = buffers[view["buffer"]]
    start = view.get("byteOffset", 0) + acc.get("byteOffset", 0)
    stride = view.get("byteStride") or size * per
    out = np.empty((count, per), dtype=np.float64 if fmt == "f" else np.int64)
    for i in range(count):
        off = start + i * stride
        out[i] = struct.unpack_from("<" + fmt * per, data, off)
    return out


def _parse_gltf(path) -> TriMesh:
    path = os.fspath(path)
    glb_chunk = None
    with open(path, "rb") as fh:
        head = fh.read(4)
        fh.seek(0)
        raw = fh.read()
    if head == b"glTF":
        magic, version, _length = struct.unpack_from("<III", raw, 0)
        if version != 2:
            raise MeshParseError(f"unsupported GLB version {version}", path)
        offset = 12
        doc = None
        while offset < len(raw):
            chunk_len, chunk_type = struct.unpack_from("<II", raw, offset)
            chunk = raw[offset + 8:offset + 8 + chunk_len]
            if chunk_type == 0x4E4F534A:      # JSON
                doc = json.loads(chunk)
            elif chunk_type == 0x004E4942:    # BIN
                glb_chunk = chunk
            offset += 8 + chunk_len + (-chunk_len % 4)
        if doc is None:
            raise MeshParseError("GLB missing JSON chunk", path)
    else:
        try:
            doc = json.loads(raw)
        except json.JSONDecodeError as exc:
            raise MeshParseError(f"invalid glTF JSON: {exc}", path) from None

    try:
        buffers = _gltf_buffers(doc, path, glb_chunk)
        all_vertices = []
        all_faces = []
        base = 0
        for gltf_mesh in doc.get("meshes", []):
            for prim in gltf_mesh.get("primitives", []):
                if prim.get("mode", 4) != 4:
                    continue
                pos = _read_accessor(doc, buffers, prim["attributes"]["POSITION"], path)
                if "indices" in prim:
                    idx = _read_accessor(doc, buffers, prim["indices"], path).reshape(-1)
                else:
                    idx = np.arange(len(pos), dtype=np.int64)
                all_vertices.append(pos)
                all_faces.append(idx.reshape(-1, 3) + base)
                base += len(pos)
    except (KeyError, IndexError, struct.error) as exc:
        raise MeshParseError(f"malformed glTF: {exc!r}", path) from None

    if not all_faces:
        raise EmptyMeshError(f"{path}: no triangle geometry")
    return TriMesh.validate(np.concatenate(all_vertices), np.concatenate(all_faces))


def import_mesh(path, format: str | None = None) -> TriMesh:
    """Load an OBJ or glTF/GLB file as a validated mesh.

    ``format`` overrides extension sniffing ("obj" or "gltf").
    """
    path = os.fspath(path)
    if not os.path.exists(path):
        raise FileNotFoundError(path)
    if format is None:
        ext = os.path.splitext(path)[1].lower()
        format = {".obj": "obj", ".gltf": "gltf", ".glb": "gltf"}.get(ext)
        if format is None:
            raise UnsupportedFormatError(f"cannot infer mesh format from {path!r}")
    if format == "obj":
        return _parse_obj(path)
    if format == "gltf":
        return _parse_gltf(path)
    raise UnsupportedFormatError(f"unknown mesh format {format!r}")
