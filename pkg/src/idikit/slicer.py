"""Cut a watertight mesh into two watertight halves along a plane.

Straddling triangles are split with crossing points shared between
neighbors (cached per undirected edge), vertices near the plane are
snapped onto it, and each half's open cross-section boundary is capped
with ear-clipped faces tagged :data:`~idikit.mesh.CAP_MATERIAL_ID`.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateCutError, NoIntersectionError, NonWatertightInputError
from .mesh import CAP_MATERIAL_ID, TriMesh, connected_component_labels, edge_codes
from .triangulate import triangulate_loops

# on-plane epsilon as a fraction of the bbox diagonal
PLANE_EPS_FACTOR = 1e-9
# edge-crossing parameters closer than this to an endpoint snap the endpoint
# onto the plane instead of spawning a sliver triangle
T_MIN = 1e-5


@dataclass(frozen=True)
class CutPlane:
    """Plane through ``point`` with unit ``normal``; ``extent`` is an
    optional (width, height) display rectangle for UIs."""

    point: np.ndarray
    normal: np.ndarray
    extent: tuple[float, float] | None = None

    def __post_init__(self):
        object.__setattr__(self, "point", np.asarray(self.point, dtype=np.float64))
        n = np.asarray(self.normal, dtype=np.float64)
        if abs(np.linalg.norm(n) - 1.0) > 1e-9:
            raise ValueError("plane normal must be unit length")
        object.__setattr__(self, "normal", n)

    @staticmethod
    def from_point_normal(point, normal, extent=None) -> "CutPlane":
        n = np.asarray(normal, dtype=np.float64)
        length = np.linalg.norm(n)
        if length == 0:
            raise ValueError("plane normal must be nonzero")
        return CutPlane(np.asarray(point, dtype=np.float64), n / length, extent)

    def signed_distance(self, points) -> np.ndarray:
        return (np.asarray(points, dtype=np.float64) - self.point) @ self.normal


@dataclass(frozen=True)
class Segment:
    segment_id: str
    mesh: TriMesh
    label: str


@dataclass(frozen=True)
class SegmentSet:
    segments: list[Segment]
    provenance: str  # "manual" | "automatic"

    def ids(self):
        return [s.segment_id for s in self.segments]


def _snap_vertices(mesh: TriMesh, plane: CutPlane):
    """Iteratively snap vertices onto the plane: first everything inside
    the plane epsilon, then endpoints of edges whose crossing parameter
    would create a sliver. Returns (snapped vertex array, signed dist)."""
    verts = np.array(mesh.vertices)
    eps = PLANE_EPS_FACTOR * max(mesh.bbox_diagonal, 1e-30)
    dist = plane.signed_distance(verts)
    snapped = np.abs(dist) <= eps

    n_verts = len(verts)
    codes = np.unique(edge_codes(mesh.triangles))
    edges = np.column_stack([codes // n_verts, codes % n_verts])
    for _ in range(16):
        d = np.where(snapped, 0.0, dist)
        d_lo, d_hi = d[edges[:, 0]], d[edges[:, 1]]
        crossing = (d_lo * d_hi) < 0
        t = np.zeros(len(edges))
        t[crossing] = d_lo[crossing] / (d_lo[crossing] - d_hi[crossing])
        near_lo = crossing & (t < T_MIN)
        near_hi = crossing & (t > 1.0 - T_MIN)
        marks = np.concatenate([edges[near_lo, 0], edges[near_hi, 1]])
        if len(marks) == 0 or snapped[marks].all():
            break
        snapped[marks] = True

    verts[snapped] -= dist[snapped, None] * plane.normal
    dist = np.where(snapped, 0.0, dist)
    return verts, dist


def _cap_boundary(verts, tris, plane: CutPlane):
    """Triangulate the open boundary loops of a half mesh (all of which lie
    on the cut plane) into cap faces. Returns (m, 3) cap triangles."""
    tris_arr = np.asarray(tris, dtype=np.int64)
    directed = np.concatenate(
        [tris_arr[:, [0, 1]], tris_arr[:, [1, 2]], tris_arr[:, [2, 0]]]
    )
    codes = edge_codes(tris_arr)
    uniq, inverse, counts = np.unique(codes, return_inverse=True, return_counts=True)
    boundary = directed[counts[inverse] == 1]
    if len(boundary) == 0:
        return np.zeros((0, 3), dtype=np.int64)

    # chain directed boundary edges into loops (deterministic successor pick)
    succ: dict[int, list[int]] = {}
    for a, b in boundary:
        succ.setdefault(int(a), []).append(int(b))
    for outs in succ.values():
        outs.sort(reverse=True)  # pop() yields the smallest
    loops = []
    starts = sorted(succ.keys())
    for start in starts:
        while succ.get(start):
            loop = [start]
            cur = succ[start].pop()
            while cur != start:
                loop.append(cur)
                nxt = succ[cur].pop()
                cur = nxt
            loops.append(loop)

    # 2D basis in the plane
    n = plane.normal
    ref = np.array([1.0, 0.0, 0.0]) if abs(n[0]) < 0.9 else np.array([0.0, 1.0, 0.0])
    u = np.cross(n, ref)
    u /= np.linalg.norm(u)
    v = np.cross(n, u)

    # caps traverse each loop reversed so every boundary edge gets its
    # opposite-direction twin
    loops_pts, loops_ids = [], []
    for loop in loops:
        if len(loop) < 3:
            continue
        rev = loop[::-1]
        p = verts[rev] - plane.point
        loops_pts.append(np.column_stack([p @ u, p @ v]))
        loops_ids.append(rev)
    if not loops_pts:
        return np.zeros((0, 3), dtype=np.int64)
    cap = triangulate_loops(loops_pts, loops_ids)
    return np.asarray(cap, dtype=np.int64).reshape(-1, 3)


def _build_half(verts, tris, mats, plane, want_cap=True):
    cap = _cap_boundary(verts, tris, plane) if want_cap else np.zeros((0, 3), np.int64)
    all_tris = np.concatenate([np.asarray(tris, dtype=np.int64).reshape(-1, 3), cap])
    all_mats = np.concatenate(
        [np.asarray(mats, dtype=np.int64), np.full(len(cap), CAP_MATERIAL_ID, dtype=np.int64)]
    )
    used, reindexed = np.unique(all_tris, return_inverse=True)
    return TriMesh.validate(verts[used], reindexed.reshape(-1, 3), all_mats)


def slice_by_plane(mesh: TriMesh, plane: CutPlane, id_base: str = "seg") -> SegmentSet:
    """Split ``mesh`` into the positive- and negative-side halves of
    ``plane``, both watertight and capped.

    Raises NonWatertightInputError, NoIntersectionError (plane misses the
    mesh) or DegenerateCutError (plane only grazes vertices/edges/faces,
    leaving one side empty).
    """
    if not mesh.watertight:
        raise NonWatertightInputError("slicing requires a watertight mesh")

    verts, dist = _snap_vertices(mesh, plane)
    signs = np.sign(dist).astype(np.int8)
    tri_signs = signs[mesh.triangles]
    has_pos = (tri_signs > 0).any(axis=1)
    has_neg = (tri_signs < 0).any(axis=1)
    straddling = has_pos & has_neg
    coplanar = ~has_pos & ~has_neg

    mats = (
        mesh.materials
        if mesh.materials is not None
        else np.zeros(len(mesh.triangles), dtype=np.int64)
    )

    # coplanar faces join the side their outward normal faces away from
    face_normals = mesh.triangle_normals()
    cop_to_neg = np.zeros(len(mesh.triangles), dtype=bool)
    if coplanar.any():
        cop_to_neg[coplanar] = face_normals[coplanar] @ plane.normal > 0

    pos_keep = has_pos & ~straddling | (coplanar & ~cop_to_neg)
    neg_keep = has_neg & ~straddling | (coplanar & cop_to_neg)

    pos_tris = [t for t in mesh.triangles[pos_keep]]
    pos_mats = list(mats[pos_keep])
    neg_tris = [t for t in mesh.triangles[neg_keep]]
    neg_mats = list(mats[neg_keep])

    # split straddling triangles; crossing vertices cached per undirected
    # edge so adjacent triangles share them exactly
    verts_list = [verts]
    next_index = len(verts)
    crossing_cache: dict[tuple[int, int], int] = {}

    def crossing(a: int, b: int) -> int:
        nonlocal next_index
        key = (a, b) if a < b else (b, a)
        idx = crossing_cache.get(key)
        if idx is None:
            lo, hi = key
            t = dist[lo] / (dist[lo] - dist[hi])
            point = verts[lo] + t * (verts[hi] - verts[lo])
            verts_list.append(point.reshape(1, 3))
            idx = next_index
            next_index += 1
            crossing_cache[key] = idx
        return idx

    for ti in np.nonzero(straddling)[0]:
        tri = mesh.triangles[ti]
        pos_poly: list[int] = []
        neg_poly: list[int] = []
        for k in range(3):
            a, b = int(tri[k]), int(tri[(k + 1) % 3])
            sa, sb = signs[a], signs[b]
            if sa >= 0:
                pos_poly.append(a)
            if sa <= 0:
                neg_poly.append(a)
            if sa * sb < 0:
                m = crossing(a, b)
                pos_poly.append(m)
                neg_poly.append(m)
        for poly, tris_out, mats_out in (
            (pos_poly, pos_tris, pos_mats),
            (neg_poly, neg_tris, neg_mats),
        ):
            for i in range(1, len(poly) - 1):
                tri_out = (poly[0], poly[i], poly[i + 1])
                if len(set(tri_out)) == 3:
                    tris_out.append(np.array(tri_out, dtype=np.int64))
                    mats_out.append(int(mats[ti]))

    if not pos_tris or not neg_tris:
        touched = bool((signs == 0).any()) or bool(straddling.any())
        if touched:
            raise DegenerateCutError("cut grazes the surface; one side is empty")
        raise NoIntersectionError("plane does not intersect the mesh")

    all_verts = np.concatenate(verts_list)
    pos = _build_half(all_verts, pos_tris, pos_mats, plane)
    neg = _build_half(all_verts, neg_tris, neg_mats, plane)
    return SegmentSet(
        segments=[
            Segment(f"{id_base}.pos", pos, "positive-side"),
            Segment(f"{id_base}.neg", neg, "negative-side"),
        ],
        provenance="manual",
    )


def split_disconnected(mesh: TriMesh, id_base: str = "seg") -> SegmentSet:
    """One segment per edge-connected triangle component."""
    labels = connected_component_labels(mesh)
    count = int(labels.max()) + 1
    segments = []
    for c in range(count):
        keep = labels == c
        tris = mesh.triangles[keep]
        mats = mesh.materials[keep] if mesh.materials is not None else None
        used, reindexed = np.unique(tris, return_inverse=True)
        part = TriMesh.validate(mesh.vertices[used], reindexed.reshape(-1, 3), mats)
        suffix = f"{id_base}.c{c}" if count > 1 else id_base
        segments.append(Segment(suffix, part, f"auto-{c}" if count > 1 else "auto-0"))
    return SegmentSet(segments=segments, provenance="automatic")
