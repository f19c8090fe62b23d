"""Procedural fixture meshes: box, icosphere, torus, cylinder, revolved
solids, extruded polygons, and the dumbbell / bridge shapes used by the
test and demo scenes. All solids are watertight and outward-oriented."""

from __future__ import annotations

import numpy as np

from .mesh import TriMesh, signed_volume
from .triangulate import ear_clip


def _oriented(vertices, faces) -> TriMesh:
    """Flip winding if the closed surface came out inward-facing."""
    faces = np.asarray(faces, dtype=np.int64)
    if signed_volume(np.asarray(vertices, dtype=np.float64), faces) < 0:
        faces = faces[:, [0, 2, 1]]
    return TriMesh.validate(vertices, faces)


def box(size=(1.0, 1.0, 1.0), center=(0.0, 0.0, 0.0)) -> TriMesh:
    sx, sy, sz = np.asarray(size, dtype=np.float64) / 2.0
    cx, cy, cz = center
    v = np.array(
        [
            [cx - sx, cy - sy, cz - sz],
            [cx + sx, cy - sy, cz - sz],
            [cx + sx, cy + sy, cz - sz],
            [cx - sx, cy + sy, cz - sz],
            [cx - sx, cy - sy, cz + sz],
            [cx + sx, cy - sy, cz + sz],
            [cx + sx, cy + sy, cz + sz],
            [cx - sx, cy + sy, cz + sz],
        ]
    )
    f = np.array(
        [
            [0, 2, 1], [0, 3, 2],        # z-
            [4, 5, 6], [4, 6, 7],        # z+
            [0, 1, 5], [0, 5, 4],        # y-
            [3, 7, 6], [3, 6, 2],        # y+
            [0, 4, 7], [0, 7, 3],        # x-
            [1, 2, 6], [1, 6, 5],        # x+
        ],
        dtype=np.int64,
    )
    return TriMesh.validate(v, f)


def unit_cube() -> TriMesh:
    """Axis-aligned unit cube spanning [0, 1]^3."""
    return box(center=(0.5, 0.5, 0.5))


def icosphere(radius=1.0, subdivisions=3, center=(0.0, 0.0, 0.0)) -> TriMesh:
    t = (1.0 + np.sqrt(5.0)) / 2.0
    verts = np.array(
        [
            [-1, t, 0], [1, t, 0], [-1, -t, 0], [1, -t, 0],
            [0, -1, t], [0, 1, t], [0, -1, -t], [0, 1, -t],
            [t, 0, -1], [t, 0, 1], [-t, 0, -1], [-t, 0, 1],
        ],
        dtype=np.float64,
    )
    faces = [
        (0, 11, 5), (0, 5, 1), (0, 1, 7), (0, 7, 10), (0, 10, 11),
        (1, 5, 9), (5, 11, 4), (11, 10, 2), (10, 7, 6), (7, 1, 8),
        (3, 9, 4), (3, 4, 2), (3, 2, 6), (3, 6, 8), (3, 8, 9),
        (4, 9, 5), (2, 4, 11), (6, 2, 10), (8, 6, 7), (9, 8, 1),
    ]
    verts = [v / np.linalg.norm(v) for v in verts]
    midpoint_cache: dict[tuple[int, int], int] = {}

    def midpoint(a, b):
        key = (min(a, b), max(a, b))
        if key not in midpoint_cache:
            m = verts[a] + verts[b]
            verts.append(m / np.linalg.norm(m))
            midpoint_cache[key] = len(verts) - 1
        return midpoint_cache[key]

    for _ in range(subdivisions):
        new_faces = []
        for a, b, c in faces:
            ab, bc, ca = midpoint(a, b), midpoint(b, c), midpoint(c, a)
            new_faces += [(a, ab, ca), (b, bc, ab), (c, ca, bc), (ab, bc, ca)]
        faces = new_faces

    v = np.array(verts) * radius + np.asarray(center, dtype=np.float64)
    return TriMesh.validate(v, np.array(faces, dtype=np.int64))


def torus(major_radius=0.5, minor_radius=0.2, n_major=48, n_minor=24,
          center=(0.0, 0.0, 0.0)) -> TriMesh:
    """Torus around the Y axis (ring lies in the XZ plane)."""
    cx, cy, cz = center
    verts = np.empty((n_major * n_minor, 3))
    for i in range(n_major):
        theta = 2 * np.pi * i / n_major
        for j in range(n_minor):
            phi = 2 * np.pi * j / n_minor
            r = major_radius + minor_radius * np.cos(phi)
            verts[i * n_minor + j] = (
                cx + r * np.cos(theta),
                cy + minor_radius * np.sin(phi),
                cz + r * np.sin(theta),
            )
    faces = []
    for i in range(n_major):
        for j in range(n_minor):
            a = i * n_minor + j
            b = i * n_minor + (j + 1) % n_minor
            c = ((i + 1) % n_major) * n_minor + (j + 1) % n_minor
            d = ((i + 1) % n_major) * n_minor + j
            faces += [(a, b, c), (a, c, d)]
    return _oriented(verts, faces)


def cylinder(radius=0.5, height=1.0, segments=32, center=(0.0, 0.0, 0.0)) -> TriMesh:
    """Closed cylinder along the Y axis."""
    cx, cy, cz = center
    lo, hi = cy - height / 2, cy + height / 2
    ring = [
        (cx + radius * np.cos(2 * np.pi * i / segments),
         cz + radius * np.sin(2 * np.pi * i / segments))
        for i in range(segments)
    ]
    verts = [(x, lo, z) for x, z in ring] + [(x, hi, z) for x, z in ring]
    verts += [(cx, lo, cz), (cx, hi, cz)]
    b_center, t_center = 2 * segments, 2 * segments + 1
    faces = []
    for i in range(segments):
        j = (i + 1) % segments
        faces += [(i, j, segments + j), (i, segments + j, segments + i)]
        faces.append((b_center, j, i))
        faces.append((t_center, segments + i, segments + j))
    return _oriented(np.array(verts), faces)


def revolve(profile, segments=48) -> TriMesh:
    """Solid of revolution around the Y axis.

    ``profile`` is a list of (y, radius) pairs from bottom to top; the first
    and last radius must be 0 (they become pole vertices).
    """
    profile = [(float(y), float(r)) for y, r in profile]
    if profile[0][1] != 0.0 or profile[-1][1] != 0.0:
        raise ValueError("revolve profile must start and end at radius 0")
    interior = profile[1:-1]
    verts = [(0.0, profile[0][0], 0.0)]
    for y, r in interior:
        for i in range(segments):
            a = 2 * np.pi * i / segments
            verts.append((r * np.cos(a), y, r * np.sin(a)))
    verts.append((0.0, profile[-1][0], 0.0))
    top = len(verts) - 1

    def ring(k, i):
        return 1 + k * segments + (i % segments)

    faces = []
    for i in range(segments):
        faces.append((0, ring(0, i + 1), ring(0, i)))
    for k in range(len(interior) - 1):
        for i in range(segments):
            a, b = ring(k, i), ring(k, i + 1)
            c, d = ring(k + 1, i + 1), ring(k + 1, i)
            faces += [(a, b, c), (a, c, d)]
    last = len(interior) - 1
    for i in range(segments):
        faces.append((top, ring(last, i), ring(last, i + 1)))
    return _oriented(np.array(verts), faces)


def dumbbell(bulb_radius=0.05, neck_radius=0.016, bulb_center_offset=0.06,
             rings=48, segments=40) -> TriMesh:
    """Two spherical bulbs joined by a cylindrical neck, axis along Y.

    The neck-bulb junctions are concave creases, which makes this the
    canonical fixture for concavity-biased segmentation.
    """
    R, rn, d = bulb_radius, neck_radius, bulb_center_offset
    y0, y1 = -(d + R), d + R
    ys = np.linspace(y0, y1, rings)

    def radius_at(y):
        r = 0.0
        for c in (-d, d):
            q = R * R - (y - c) ** 2
            if q > 0:
                r = max(r, np.sqrt(q))
        if abs(y) <= d:
            r = max(r, rn)
        return r

    profile = [(y0, 0.0)] + [(y, radius_at(y)) for y in ys[1:-1]] + [(y1, 0.0)]
    return revolve(profile, segments=segments)


def extrude_polygon(points2d, height, z0=0.0) -> TriMesh:
    """Extrude a simple CCW polygon in the XY plane along +Z, capped on
    both ends (watertight prism)."""
    pts = np.asarray(points2d, dtype=np.float64)
    n = len(pts)
    verts = np.concatenate(
        [
            np.column_stack([pts, np.full(n, z0)]),
            np.column_stack([pts, np.full(n, z0 + height)]),
        ]
    )
    faces = []
    for i in range(n):
        j = (i + 1) % n
        faces += [(i, j, n + j), (i, n + j, n + i)]
    cap = ear_clip(pts)
    for a, b, c in cap:
        faces.append((a, c, b))                  # bottom faces -Z
        faces.append((n + a, n + b, n + c))      # top faces +Z
    return _oriented(verts, faces)


def bridge(scale=0.2, depth=0.08) -> TriMesh:
    """Two towers joined by a top span (an extruded gate outline): a
    horizontal cut through the span leaves one upper piece and two
    disconnected legs."""
    outline = np.array(
        [
            [0.0, 0.0], [0.2, 0.0], [0.2, 0.7], [0.8, 0.7],
            [0.8, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0],
        ]
    ) * scale
    return extrude_polygon(outline, depth)


def quad(width=0.1, height=0.08, center=(0.0, 0.0, 0.0)) -> TriMesh:
    """Flat two-triangle panel in the local XY plane (display geometry,
    not watertight)."""
    w, h = width / 2, height / 2
    cx, cy, cz = center
    v = np.array(
        [[cx - w, cy - h, cz], [cx + w, cy - h, cz],
         [cx + w, cy + h, cz], [cx - w, cy + h, cz]]
    )
    return TriMesh.validate(v, np.array([[0, 1, 2], [0, 2, 3]], dtype=np.int64))
