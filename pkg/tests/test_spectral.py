import numpy as np
import pytest

from idikit.errors import TooFewTrianglesError
from idikit.mesh import TriMesh
from idikit.primitives import icosphere
from idikit.spectral import (
    DualGraph,
    SpectralEmbedding,
    SpectralMeshSegmenter,
    build_dual_graph,
    segment_auto,
    segments_from_labels,
    select_k,
    spectral_embed,
)

from conftest import DUMBBELL_KW

# frozen from the canonical dumbbell (rings=28, segments=22), seed 42, k=3:
# the partition is three contiguous triangle-index ranges (bulb/neck/bulb)
GOLDEN_DUMBBELL_PARTS = [
    frozenset(range(0, 506)),
    frozenset(range(506, 638)),
    frozenset(range(638, 1144)),
]


def flat_grid(nx=4, ny=4):
    """Planar triangulated grid: all dihedral angles zero."""
    verts = [(i, j, 0.0) for j in range(ny + 1) for i in range(nx + 1)]
    tris = []
    for j in range(ny):
        for i in range(nx):
            a = j * (nx + 1) + i
            b = a + 1
            c = a + nx + 2
            d = a + nx + 1
            tris += [(a, b, c), (a, c, d)]
    return TriMesh.validate(np.array(verts, dtype=float), np.array(tris))


def folded_pair(angle_deg=90.0):
    """Two triangles sharing an edge, folded so normals differ by angle."""
    ang = np.deg2rad(angle_deg)
    verts = np.array(
        [
            [0.0, 0.0, 0.0],
            [1.0, 0.0, 0.0],
            [0.5, 1.0, 0.0],
            [0.5, -np.cos(ang), np.sin(ang)],
        ]
    )
    tris = np.array([[0, 1, 2], [1, 0, 3]])
    return TriMesh.validate(verts, tris)


def dense_laplacian(graph):
    """Independent dense oracle for the normalized Laplacian."""
    n = graph.node_count
    w = np.zeros((n, n))
    for (i, j), a in zip(graph.edges, graph.affinities):
        w[i, j] = w[j, i] = a
    deg = w.sum(axis=1)
    lap = np.zeros((n, n))
    for i in range(n):
        for j in range(n):
            if deg[i] > 0 and deg[j] > 0:
                lap[i, j] = (1.0 if i == j else 0.0) - w[i, j] / np.sqrt(deg[i] * deg[j])
    return lap


def random_multicomponent_graph(rng):
    sizes = rng.integers(3, 9, size=int(rng.integers(2, 5)))
    edges, offset = [], 0
    for size in sizes:
        # random connected block: a path plus extra random edges
        for i in range(size - 1):
            edges.append((offset + i, offset + i + 1))
        for _ in range(int(rng.integers(0, size))):
            a, b = rng.integers(0, size, size=2)
            if a != b:
                edges.append((offset + min(a, b), offset + max(a, b)))
        offset += size
    edges = np.unique(np.array(sorted(set(map(tuple, edges)))), axis=0)
    affinities = rng.uniform(0.2, 1.0, size=len(edges))
    return DualGraph(offset, edges, 1.0 - affinities, affinities), len(sizes)


class TestDualGraph:
    def test_flat_grid_reduces_to_geodesic_term(self):
        grid = flat_grid()
        graph = build_dual_graph(grid, delta=0.7)
        # all dihedrals zero: only the delta-scaled geodesic term remains
        geo = np.linalg.norm(
            grid.triangle_centroids()[graph.edges[:, 1]]
            - grid.triangle_centroids()[graph.edges[:, 0]],
            axis=1,
        )
        assert np.allclose(graph.weights, 0.7 * geo / geo.mean())

    def test_right_angle_fold(self):
        graph = build_dual_graph(folded_pair(90.0), delta=0.0)
        # single edge: ang = 1 - cos(90) = 1 before normalization,
        # normalized by its own mean -> weight exactly (1 - delta)
        assert graph.weights == pytest.approx([1.0])

    def test_edge_count_matches_interior_edges(self, bell):
        graph = build_dual_graph(bell)
        # watertight: every edge interior, #edges = 3*T/2
        assert len(graph.edges) == 3 * len(bell.triangles) // 2

    def test_symmetry_by_construction(self, bell):
        graph = build_dual_graph(bell)
        assert (graph.edges[:, 0] < graph.edges[:, 1]).all()
        assert (graph.affinities > 0).all()

    def test_dumbbell_neck_edges_above_mean_weight(self, bell):
        graph = build_dual_graph(bell, delta=0.5)
        centroids = bell.triangle_centroids()
        mid = (centroids[graph.edges[:, 0]] + centroids[graph.edges[:, 1]]) / 2
        # crease rings at the neck-bulb junction (|y| near 0.0125)
        crease = (np.abs(np.abs(mid[:, 1]) - 0.0125) < 0.004)
        assert graph.weights[crease].mean() > graph.weights.mean()

    def test_too_few_triangles(self):
        single = TriMesh.validate(
            np.array([[0.0, 0, 0], [1.0, 0, 0], [0.0, 1, 0]]), np.array([[0, 1, 2]])
        )
        with pytest.raises(TooFewTrianglesError):
            build_dual_graph(single)


class TestSpectralEmbed:
    def test_two_components_two_null_eigenvalues(self, disjoint_spheres):
        graph = build_dual_graph(disjoint_spheres)
        emb = spectral_embed(graph, 5)
        assert emb.eigenvalues[0] < 1e-9
        assert emb.eigenvalues[1] < 1e-9
        assert emb.eigenvalues[2] > 1e-9

    def test_complete_graph_k4(self):
        edges = np.array([[0, 1], [0, 2], [0, 3], [1, 2], [1, 3], [2, 3]])
        graph = DualGraph(4, edges, np.ones(6), np.ones(6))
        emb = spectral_embed(graph, 3)
        assert np.allclose(emb.eigenvalues, [0, 4 / 3, 4 / 3, 4 / 3], atol=1e-9)

    def test_path_graph_matches_dense_oracle(self):
        edges = np.array([[0, 1], [1, 2]])
        graph = DualGraph(3, edges, np.ones(2), np.ones(2))
        emb = spectral_embed(graph, 2)
        oracle = np.linalg.eigvalsh(dense_laplacian(graph))
        assert emb.eigenvalues[0] == pytest.approx(0.0, abs=1e-9)
        assert np.allclose(emb.eigenvalues, oracle, atol=1e-9)

    def test_random_graphs_nullspace_multiplicity(self):
        rng = np.random.default_rng(7)
        for _ in range(10):
            graph, n_components = random_multicomponent_graph(rng)
            k_max = min(9, graph.node_count - 1)
            emb = spectral_embed(graph, k_max)
            near_zero = int((emb.eigenvalues < 1e-9).sum())
            assert near_zero == min(n_components, k_max + 1)
            oracle = np.linalg.eigvalsh(dense_laplacian(graph))
            assert np.allclose(emb.eigenvalues, oracle[: len(emb.eigenvalues)], atol=1e-9)

    def test_eigen_residuals(self, bell):
        graph = build_dual_graph(bell)
        emb = spectral_embed(graph, 6)
        lap = dense_laplacian(graph)
        for lam, vec in zip(emb.eigenvalues, emb.eigenvectors.T):
            assert np.abs(lap @ vec - lam * vec).max() <= 1e-6

    def test_eigenvalue_range(self, bell):
        emb = spectral_embed(build_dual_graph(bell), 10)
        assert (emb.eigenvalues >= 0).all()
        assert (emb.eigenvalues <= 2 + 1e-9).all()


class TestSelectK:
    def test_component_lower_bound(self):
        emb = SpectralEmbedding(np.array([0.0, 0.0, 0.5, 0.6, 0.7]), np.zeros((5, 5)))
        assert select_k(emb, 4) >= 2

    def test_eigengap_example(self):
        emb = SpectralEmbedding(np.array([0.0, 0.01, 0.02, 0.9, 0.95]), np.zeros((5, 5)))
        assert select_k(emb, 4) == 3

    def test_clamped_to_k_max(self):
        emb = SpectralEmbedding(np.zeros(6), np.zeros((6, 6)))
        assert 1 <= select_k(emb, 3) <= 3


class TestSegmentAuto:
    def test_disjoint_spheres_never_merge(self, disjoint_spheres):
        seg = segment_auto(disjoint_spheres, seed=42)
        half = len(disjoint_spheres.triangles) // 2
        for lab in range(seg.k):
            members = np.flatnonzero(seg.labels == lab)
            assert (members < half).all() or (members >= half).all()
        assert seg.k >= 2

    def test_single_tetrahedron_k1(self):
        verts = np.array([[0.0, 0, 0], [1.0, 0, 0], [0.0, 1, 0], [0.0, 0, 1]])
        tris = np.array([[0, 2, 1], [0, 1, 3], [0, 3, 2], [1, 2, 3]])
        tetra = TriMesh.validate(verts, tris)
        seg = segment_auto(tetra, k=1)
        assert seg.k == 1
        assert (seg.labels == 0).all()

    def test_dumbbell_auto_k(self, bell):
        seg = segment_auto(bell, seed=42)
        assert seg.k in (2, 3)

    def test_dumbbell_golden_partition(self, bell):
        seg = segment_auto(bell, k=3, seed=42)
        parts = sorted(
            (frozenset(np.flatnonzero(seg.labels == lab).tolist()) for lab in range(3)),
            key=lambda p: (len(p), min(p)),
        )
        golden = sorted(GOLDEN_DUMBBELL_PARTS, key=lambda p: (len(p), min(p)))
        assert parts == golden

    def test_neck_touches_cylindrical_region(self, bell):
        seg = segment_auto(bell, k=3, seed=42)
        sizes = np.bincount(seg.labels)
        neck_label = int(np.argmin(sizes))
        centroids = bell.triangle_centroids()[seg.labels == neck_label]
        assert np.abs(centroids[:, 1]).max() < 0.02  # all near the waist

    def test_determinism_bit_for_bit(self, bell):
        a = segment_auto(bell, delta=0.4, k=4, seed=99)
        b = segment_auto(bell, delta=0.4, k=4, seed=99)
        assert np.array_equal(a.labels, b.labels)

    def test_labels_edge_connected(self, bell):
        seg = segment_auto(bell, k=5, seed=1)
        graph = build_dual_graph(bell)
        adjacency = graph.adjacency()
        for lab in range(seg.k):
            members = set(np.flatnonzero(seg.labels == lab).tolist())
            start = min(members)
            seen = {start}
            stack = [start]
            while stack:
                cur = stack.pop()
                for nb in adjacency[cur]:
                    if nb in members and nb not in seen:
                        seen.add(nb)
                        stack.append(nb)
            assert seen == members

    def test_segments_from_labels_cover(self, bell):
        seg = segment_auto(bell, k=3, seed=42)
        parts = segments_from_labels(bell, seg, "db")
        assert sum(len(s.mesh.triangles) for s in parts.segments) == len(bell.triangles)


class TestEstimatorFacade:
    def test_fit_predict_and_params(self, bell):
        est = SpectralMeshSegmenter(k=3, seed=42)
        labels = est.fit_predict(bell)
        assert est.k_ == 3
        assert np.array_equal(labels, est.labels_)
        assert est.get_params() == {"delta": 0.5, "k": 3, "k_max": 10, "seed": 42}

    def test_set_params_round_trip(self):
        est = SpectralMeshSegmenter().set_params(delta=0.3, k_max=5)
        assert est.delta == 0.3
        assert est.k_max == 5
