import numpy as np
import pytest

from idikit.errors import (
    DegenerateCutError,
    NoIntersectionError,
    NonWatertightInputError,
)
from idikit.mesh import CAP_MATERIAL_ID, TriMesh, compute_stats, edge_codes
from idikit.slicer import CutPlane, slice_by_plane, split_disconnected
from idikit.primitives import box, unit_cube


def plane_z(height):
    return CutPlane(np.array([0.0, 0.0, height]), np.array([0.0, 0.0, 1.0]))


def cap_loop_count(mesh, plane):
    """Independent loop oracle: count connected groups of cap-boundary
    edges (edges between a cap face and a surface face)."""
    cap_faces = np.nonzero(mesh.materials == CAP_MATERIAL_ID)[0]
    cap_set = set(cap_faces.tolist())
    edge_owner = {}
    shared = []
    for t, tri in enumerate(mesh.triangles):
        for k in range(3):
            e = tuple(sorted((int(tri[k]), int(tri[(k + 1) % 3]))))
            if e in edge_owner:
                if (edge_owner[e] in cap_set) != (t in cap_set):
                    shared.append(e)
            else:
                edge_owner[e] = t
    # group boundary edges into loops by shared vertices
    parent = {}

    def find(x):
        while parent.get(x, x) != x:
            x = parent[x]
        return x

    for a, b in shared:
        parent.setdefault(a, a)
        parent.setdefault(b, b)
        ra, rb = find(a), find(b)
        if ra != rb:
            parent[ra] = rb
    return len({find(a) for a, _ in shared})


class TestSliceByPlane:
    def test_cube_bisection(self, cube):
        parts = slice_by_plane(cube, plane_z(0.5))
        assert [s.label for s in parts.segments] == ["positive-side", "negative-side"]
        vols = [compute_stats(s.mesh).volume for s in parts.segments]
        assert vols == pytest.approx([0.5, 0.5], abs=1e-12)
        assert all(compute_stats(s.mesh).watertight for s in parts.segments)

    def test_plane_misses(self, cube):
        with pytest.raises(NoIntersectionError):
            slice_by_plane(cube, plane_z(2.0))

    def test_grazing_face_is_degenerate(self, cube):
        with pytest.raises(DegenerateCutError):
            slice_by_plane(cube, plane_z(1.0))

    def test_non_watertight_rejected(self):
        tri = TriMesh.validate(
            np.array([[0.0, 0, -1], [1.0, 0, 1], [0.0, 1, 1]]), np.array([[0, 1, 2]])
        )
        with pytest.raises(NonWatertightInputError):
            slice_by_plane(tri, plane_z(0.0))

    def test_sphere_conservation_and_single_cap_loop(self, sphere3):
        total = compute_stats(sphere3).volume
        parts = slice_by_plane(sphere3, plane_z(0.25))
        vols = [compute_stats(s.mesh).volume for s in parts.segments]
        assert abs(sum(vols) - total) <= 1e-6 * total
        for seg in parts.segments:
            assert compute_stats(seg.mesh).watertight
            assert cap_loop_count(seg.mesh, plane_z(0.25)) == 1

    def test_torus_cut_has_hole_loops(self, small_torus):
        plane = CutPlane(np.zeros(3), np.array([0.0, 1.0, 0.0]))
        total = compute_stats(small_torus).volume
        parts = slice_by_plane(small_torus, plane)
        vols = [compute_stats(s.mesh).volume for s in parts.segments]
        assert abs(sum(vols) - total) <= 1e-6 * total
        for seg in parts.segments:
            assert compute_stats(seg.mesh).watertight
            # annular cross-section: outer + inner boundary
            assert cap_loop_count(seg.mesh, plane) == 2

    def test_cap_planarity(self, sphere3):
        plane = plane_z(0.25)
        eps = 1e-9 * sphere3.bbox_diagonal * 10
        for seg in slice_by_plane(sphere3, plane).segments:
            caps = seg.mesh.materials == CAP_MATERIAL_ID
            cap_verts = seg.mesh.vertices[np.unique(seg.mesh.triangles[caps])]
            assert np.abs(plane.signed_distance(cap_verts)).max() <= max(eps, 1e-9)

    def test_second_cut_of_half_degenerates(self, cube):
        plane = plane_z(0.5)
        half = slice_by_plane(cube, plane).segments[0].mesh
        with pytest.raises((DegenerateCutError, NoIntersectionError)):
            slice_by_plane(half, plane)

    def test_watertight_edge_structure(self, bell):
        plane = CutPlane(np.zeros(3), np.array([0.0, 1.0, 0.0]))
        for seg in slice_by_plane(bell, plane).segments:
            _, counts = np.unique(edge_codes(seg.mesh.triangles), return_counts=True)
            assert (counts == 2).all()

    @pytest.mark.parametrize("fixture", ["cube", "sphere3", "small_torus", "bell", "gate"])
    def test_random_planes_conserve_volume(self, fixture, request):
        mesh = request.getfixturevalue(fixture)
        total = compute_stats(mesh).volume
        rng = np.random.default_rng(11)
        for _ in range(5):
            n = rng.normal(size=3)
            n /= np.linalg.norm(n)
            proj = mesh.vertices @ n
            span = np.ptp(proj)
            offset = rng.uniform(proj.min() + 0.2 * span, proj.max() - 0.2 * span)
            parts = slice_by_plane(mesh, CutPlane(n * offset, n))
            vols = [compute_stats(s.mesh).volume for s in parts.segments]
            assert abs(sum(vols) - total) <= 1e-6 * total
            assert all(compute_stats(s.mesh).watertight for s in parts.segments)


class TestSplitDisconnected:
    def test_two_disjoint_cubes(self):
        a, b = unit_cube(), box(center=(3.5, 0.5, 0.5))
        both = TriMesh.validate(
            np.concatenate([a.vertices, b.vertices]),
            np.concatenate([a.triangles, b.triangles + 8]),
        )
        parts = split_disconnected(both)
        assert len(parts.segments) == 2
        assert parts.provenance == "automatic"

    def test_connected_torus_identity(self, small_torus):
        parts = split_disconnected(small_torus)
        assert len(parts.segments) == 1

    def test_bridge_cut_yields_three_pieces(self, gate):
        # horizontal cut through the tower legs, below the top span
        plane = CutPlane(np.array([0.0, 0.10, 0.0]), np.array([0.0, 1.0, 0.0]))
        halves = slice_by_plane(gate, plane)
        total = sum(
            len(split_disconnected(s.mesh, s.segment_id).segments)
            for s in halves.segments
        )
        assert total == 3
