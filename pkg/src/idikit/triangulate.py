"""Ear-clipping triangulation of planar polygons, with hole support.

Caps generated by the slicer are cross-sections of watertight scan meshes:
simple loops, occasionally with nested hole loops (e.g. a torus section).
Holes are joined to the outer loop with bridge edges before clipping, so
every bridge edge appears twice with opposite direction and the result
stays watertight when welded onto an open boundary.
"""

from __future__ import annotations

import numpy as np

_EPS = 1e-12


def signed_area(points: np.ndarray) -> float:
    x, y = points[:, 0], points[:, 1]
    return 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1)))


def _cross2(o, a, b):
    return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])



def point_in_polygon(point, polygon: np.ndarray) -> bool:
    """Even-odd rule raycast."""
    x, y = point
    inside = False
    n = len(polygon)
    j = n - 1
    for i in range(n):
        xi, yi = polygon[i]
        xj, yj = polygon[j]
        if (yi > y) != (yj > y):
            t = (y - yi) / (yj - yi)
            if x < xi + t * (xj - xi):
                inside = not inside
        j = i
    return inside


def _segments_properly_intersect(p1, p2, q1, q2):
    d1 = _cross2(q1, q2, p1)
    d2 = _cross2(q1, q2, p2)
    d3 = _cross2(p1, p2, q1)
    d4 = _cross2(p1, p2, q2)
    return ((d1 > _EPS and d2 < -_EPS) or (d1 < -_EPS and d2 > _EPS)) and (
        (d3 > _EPS and d4 < -_EPS) or (d3 < -_EPS and d4 > _EPS)
    )



def ear_clip(points: np.ndarray, ids=None) -> list[tuple[int, int, int]]:
    """Triangulate a simple polygon (either winding); returns triangles as
    id triples wound like the input. ``ids`` defaults to 0..n-1.

    Linked-list ear clipping with reflex-only containment checks; a vertex
    blocks an ear when strictly inside it or on one of its edges (unless it
    duplicates a corner, which bridged hole polygons do deliberately).
    """
    points = np.asarray(points, dtype=np.float64)
    n = len(points)
    if ids is None:
        ids = list(range(n))
    if n < 3:
        return []
    orient = 1.0 if signed_area(points) >= 0 else -1.0
    scale = float(np.ptp(points, axis=0).max()) or 1.0
    near = 1e-9 * scale
    xs = points[:, 0].tolist()
    ys = points[:, 1].tolist()
    nxt = list(range(1, n)) + [0]
    prv = [n - 1] + list(range(n - 1))
    alive = [True] * n
    remaining = n
    tris: list[tuple[int, int, int]] = []

    def cross_at(i):
        p, q = prv[i], nxt[i]
        return (
            (xs[i] - xs[p]) * (ys[q] - ys[i]) - (ys[i] - ys[p]) * (xs[q] - xs[i])
        ) * orient

    reflex = {i for i in range(n) if cross_at(i) <= _EPS}

    def _near_edge(px, py, ax, ay, bx, by, cross):
        # |cross| / |ab| <= near, and p within the edge's expanded bbox
        if cross * cross > near * near * ((bx - ax) ** 2 + (by - ay) ** 2):
            return False
        return (
            min(ax, bx) - near <= px <= max(ax, bx) + near
            and min(ay, by) - near <= py <= max(ay, by) + near
        )

    def is_ear(i):
        if i in reflex:
            return False
        ia, ic = prv[i], nxt[i]
        ax, ay = xs[ia], ys[ia]
        bx, by = xs[i], ys[i]
        cx, cy = xs[ic], ys[ic]
        for r in reflex:
            if not alive[r] or r == ia or r == i or r == ic:
                continue
            px, py = xs[r], ys[r]
            if (
                (abs(px - ax) <= near and abs(py - ay) <= near)
                or (abs(px - bx) <= near and abs(py - by) <= near)
                or (abs(px - cx) <= near and abs(py - cy) <= near)
            ):
                continue  # duplicate of a corner (bridge junction)
            d1 = ((bx - ax) * (py - ay) - (by - ay) * (px - ax)) * orient
            d2 = ((cx - bx) * (py - by) - (cy - by) * (px - bx)) * orient
            d3 = ((ax - cx) * (py - cy) - (ay - cy) * (px - cx)) * orient
            if d1 > _EPS and d2 > _EPS and d3 > _EPS:
                return False  # strictly inside
            if (
                _near_edge(px, py, ax, ay, bx, by, d1)
                or _near_edge(px, py, bx, by, cx, cy, d2)
                or _near_edge(px, py, cx, cy, ax, ay, d3)
            ):
                return False  # on an ear edge: clipping would form a T-junction
        return True

    def clip(i):
        nonlocal remaining
        p_, n_ = prv[i], nxt[i]
        tris.append((ids[p_], ids[i], ids[n_]))
        alive[i] = False
        reflex.discard(i)
        remaining -= 1
        nxt[p_], prv[n_] = n_, p_
        for j in (p_, n_):
            if cross_at(j) <= _EPS:
                reflex.add(j)
            else:
                reflex.discard(j)
        return n_

    i = 0
    since_clip = 0
    while remaining > 3:
        if is_ear(i):
            i = clip(i)
            since_clip = 0
        else:
            i = nxt[i]
            since_clip += 1
            if since_clip > remaining:
                # numerically stuck (e.g. collinear runs): clip the widest
                # corner to guarantee progress
                widest = max((j for j in range(n) if alive[j]), key=cross_at)
                i = clip(widest)
                since_clip = 0

    last = [j for j in range(n) if alive[j]]
    tris.append((ids[last[0]], ids[last[1]], ids[last[2]]))
    return tris


def _bridge_hole(outer_pts, outer_ids, hole_pts, hole_ids, all_edges):
    """Splice a hole loop into the outer loop through a mutually visible
    vertex pair, duplicating both junction vertices."""
    m = int(np.argmax(hole_pts[:, 0]))
    mp = hole_pts[m]
    order = np.argsort(np.linalg.norm(outer_pts - mp, axis=1), kind="stable")
    for cand in order:
        cp = outer_pts[cand]
        visible = True
        for (e1, e2) in all_edges:
            if np.allclose(e1, mp) or np.allclose(e2, mp):
                continue
            if np.allclose(e1, cp) or np.allclose(e2, cp):
                continue
            if _segments_properly_intersect(mp, cp, e1, e2):
                visible = False
                break
        if visible:
            c = int(cand)
            new_pts = np.concatenate(
                [
                    outer_pts[: c + 1],
                    hole_pts[m:], hole_pts[: m + 1],
                    outer_pts[c:],
                ]
            )
            new_ids = (
                outer_ids[: c + 1]
                + hole_ids[m:] + hole_ids[: m + 1]
                + outer_ids[c:]
            )
            return new_pts, new_ids
    raise ValueError("no visible bridge vertex found for hole loop")


def triangulate_loops(loops_pts, loops_ids) -> list[tuple[int, int, int]]:
    """Triangulate one or more coplanar loops (2D coordinates).

    Loops are grouped by containment: even-depth loops are region outlines,
    odd-depth loops are holes of their immediately containing outline. Hole
    loops must be wound opposite to their outline (cross-sections of an
    oriented closed surface always are).
    """
    k = len(loops_pts)
    if k == 1:
        return ear_clip(loops_pts[0], loops_ids[0])

    depth = np.zeros(k, dtype=int)
    parent = [-1] * k
    for i in range(k):
        for j in range(k):
            if i != j and point_in_polygon(loops_pts[i][0], loops_pts[j]):
                depth[i] += 1
    for i in range(k):
        if depth[i] % 2 == 1:
            # parent = containing loop of depth[i]-1 with smallest area margin
            candidates = [
                j
                for j in range(k)
                if j != i
                and depth[j] == depth[i] - 1
                and point_in_polygon(loops_pts[i][0], loops_pts[j])
            ]
            parent[i] = min(candidates, key=lambda j: abs(signed_area(loops_pts[j])))

    tris: list[tuple[int, int, int]] = []
    all_edges = []
    for pts in loops_pts:
        for a in range(len(pts)):
            all_edges.append((pts[a], pts[(a + 1) % len(pts)]))

    for outer in range(k):
        if depth[outer] % 2 == 1:
            continue
        pts, ids = loops_pts[outer], list(loops_ids[outer])
        holes = [i for i in range(k) if parent[i] == outer]
        # merge holes right-to-left so earlier bridges cannot block later ones
        holes.sort(key=lambda i: -float(np.max(loops_pts[i][:, 0])))
        for h in holes:
            pts, ids = _bridge_hole(pts, ids, loops_pts[h], list(loops_ids[h]), all_edges)
        tris.extend(ear_clip(pts, ids))
    return tris
