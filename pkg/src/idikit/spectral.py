"""Automatic mesh segmentation via spectral clustering of the dual graph.

Pipeline: dual graph over adjacent triangles with a blended
geodesic/angular dissimilarity, Gaussian affinities, the symmetric
normalized Laplacian's smallest eigenpairs, eigengap model selection,
seeded k-means on the embedding, then connectivity repair so every
segment is edge-connected.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg
import scipy.sparse
import scipy.sparse.linalg
from sklearn.base import BaseEstimator, ClusterMixin

from .errors import ConvergenceFailureError, TooFewTrianglesError
from .mesh import TriMesh, edge_codes
from .slicer import Segment, SegmentSet

# dense eigensolver below this node count, Lanczos above
DENSE_SOLVER_LIMIT = 5000
# dihedral dissimilarity multipliers: cuts prefer concave creases
CONCAVE_WEIGHT = 1.0
CONVEX_WEIGHT = 0.2
ZERO_EIGENVALUE = 1e-9


@dataclass(frozen=True)
class DualGraph:
    """One node per triangle; edges join triangles sharing a mesh edge."""

    node_count: int
    edges: np.ndarray       # (m, 2) int64, each interior mesh edge once
    weights: np.ndarray     # (m,) nonnegative dissimilarity
    affinities: np.ndarray  # (m,) Gaussian kernel of weights

    def adjacency(self) -> list[list[int]]:
        adj: list[list[int]] = [[] for _ in range(self.node_count)]
        for a, b in self.edges:
            adj[int(a)].append(int(b))
            adj[int(b)].append(int(a))
        return adj


@dataclass(frozen=True)
class SpectralEmbedding:
    eigenvalues: np.ndarray    # ascending
    eigenvectors: np.ndarray   # (n, len(eigenvalues))
    laplacian_kind: str = "normalized-symmetric"


@dataclass(frozen=True)
class Segmentation:
    labels: np.ndarray  # (n,) int64 in [0, k)
    k: int
    method: str         # "auto" | "forced-k"


def build_dual_graph(mesh: TriMesh, delta: float = 0.5) -> DualGraph:
    """Dissimilarity per adjacent-triangle pair:
    ``delta * geo/mean_geo + (1-delta) * ang/mean_ang`` where geo is the
    centroid distance across the shared edge and ang is ``1 - cos`` of the
    dihedral angle, concave creases up-weighted over convex ones.
    """
    if len(mesh.triangles) < 2:
        raise TooFewTrianglesError("dual graph needs at least 2 triangles")
    if not 0.0 <= delta <= 1.0:
        raise ValueError("delta must be in [0, 1]")

    m = len(mesh.triangles)
    codes = edge_codes(mesh.triangles)
    tri_of_edge = np.tile(np.arange(m, dtype=np.int64), 3)
    order = np.argsort(codes, kind="stable")
    codes_sorted = codes[order]
    tris_sorted = tri_of_edge[order]

    # pair up edges shared by exactly two triangles
    boundaries = np.flatnonzero(np.diff(codes_sorted) != 0)
    starts = np.concatenate([[0], boundaries + 1])
    ends = np.concatenate([boundaries + 1, [len(codes_sorted)]])
    pair_mask = (ends - starts) == 2
    first = starts[pair_mask]
    pairs = np.column_stack([tris_sorted[first], tris_sorted[first + 1]])
    pairs = np.sort(pairs, axis=1)

    if len(pairs) == 0:
        return DualGraph(m, pairs.reshape(0, 2), np.zeros(0), np.zeros(0))

    centroids = mesh.triangle_centroids()
    normals = mesh.triangle_normals()
    ca, cb = centroids[pairs[:, 0]], centroids[pairs[:, 1]]
    na, nb = normals[pairs[:, 0]], normals[pairs[:, 1]]

    geo = np.linalg.norm(cb - ca, axis=1)
    cos_dihedral = np.clip(np.einsum("ij,ij->i", na, nb), -1.0, 1.0)
    concave = np.einsum("ij,ij->i", na, cb - ca) > 1e-12
    ang = (1.0 - cos_dihedral) * np.where(concave, CONCAVE_WEIGHT, CONVEX_WEIGHT)

    mean_geo = geo.mean()
    mean_ang = ang.mean()
    w = np.zeros(len(pairs))
    if mean_geo > 0:
        w += delta * geo / mean_geo
    if mean_ang > 0:
        w += (1.0 - delta) * ang / mean_ang

    sigma = w.mean()
    if sigma > 0:
        affinities = np.exp(-(w ** 2) / (2.0 * sigma ** 2))
    else:
        affinities = np.ones(len(pairs))
    return DualGraph(m, pairs, w, affinities)


def _normalized_laplacian(graph: DualGraph) -> scipy.sparse.csr_matrix:
    n = graph.node_count
    i = np.concatenate([graph.edges[:, 0], graph.edges[:, 1]])
    j = np.concatenate([graph.edges[:, 1], graph.edges[:, 0]])
    a = np.concatenate([graph.affinities, graph.affinities])
    W = scipy.sparse.coo_matrix((a, (i, j)), shape=(n, n)).tocsr()
    deg = np.asarray(W.sum(axis=1)).reshape(-1)
    inv_sqrt = np.zeros(n)
    nz = deg > 0
    inv_sqrt[nz] = 1.0 / np.sqrt(deg[nz])
    D = scipy.sparse.diags(inv_sqrt)
    # isolated nodes get a zero row (their indicator is in the null space)
    eye = scipy.sparse.diags(nz.astype(np.float64))
    return (eye - D @ W @ D).tocsr()


def spectral_embed(graph: DualGraph, k_max: int = 10) -> SpectralEmbedding:
    """The ``min(k_max + 1, n)`` smallest eigenpairs of the normalized
    Laplacian; dense solver below 5000 nodes, Lanczos (shift-invert) above.
    """
    if k_max < 1:
        raise ValueError("k_max must be >= 1")
    n = graph.node_count
    want = min(k_max + 1, n)
    L = _normalized_laplacian(graph)

    if n < DENSE_SOLVER_LIMIT:
        vals, vecs = scipy.linalg.eigh(L.toarray(), subset_by_index=[0, want - 1])
    else:
        v0 = np.full(n, 1.0 / np.sqrt(n))
        try:
            vals, vecs = scipy.sparse.linalg.eigsh(
                L, k=want, sigma=-0.01, which="LM", v0=v0, maxiter=5000
            )
        except scipy.sparse.linalg.ArpackNoConvergence as exc:
            raise ConvergenceFailureError(f"eigensolver did not converge: {exc}") from exc
        order = np.argsort(vals, kind="stable")
        vals, vecs = vals[order], vecs[:, order]

    vals = np.where((vals < 0) & (vals > -1e-9), 0.0, vals)
    return SpectralEmbedding(eigenvalues=vals, eigenvectors=vecs)


def select_k(embedding: SpectralEmbedding, k_max: int = 10) -> int:
    """Eigengap heuristic: the 1-based position of the largest gap between
    consecutive eigenvalues, at least the zero-eigenvalue multiplicity."""
    ev = embedding.eigenvalues
    if len(ev) < 2:
        return 1
    hi = min(k_max, len(ev) - 1)
    gaps = ev[1:hi + 1] - ev[:hi]
    k = int(np.argmax(gaps)) + 1
    multiplicity = int((ev < ZERO_EIGENVALUE).sum())
    return max(1, min(max(k, multiplicity), k_max))


# ---------------------------------------------------------------------------
# seeded k-means (exact iteration semantics pinned for reproducibility)


def _kmeans(features: np.ndarray, k: int, rng: np.random.Generator,
            max_iter: int = 100, tol: float = 1e-8) -> np.ndarray:
    n = len(features)
    k = min(k, n)
    # k-means++ seeding
    centers = np.empty((k, features.shape[1]))
    first = int(rng.integers(n))
    centers[0] = features[first]
    closest = np.linalg.norm(features - centers[0], axis=1) ** 2
    for c in range(1, k):
        total = closest.sum()
        if total <= 0:
            centers[c] = features[int(rng.integers(n))]
        else:
            r = rng.random() * total
            idx = int(np.searchsorted(np.cumsum(closest), r))
            centers[c] = features[min(idx, n - 1)]
        closest = np.minimum(
            closest, np.linalg.norm(features - centers[c], axis=1) ** 2
        )

    labels = np.zeros(n, dtype=np.int64)
    for _ in range(max_iter):
        dists = ((features[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2)
        labels = np.argmin(dists, axis=1)
        new_centers = np.empty_like(centers)
        for c in range(k):
            members = features[labels == c]
            if len(members):
                new_centers[c] = members.mean(axis=0)
            else:
                # re-seed an empty cluster on the globally farthest point
                far = int(np.argmax(dists.min(axis=1)))
                new_centers[c] = features[far]
        shift = float(((new_centers - centers) ** 2).sum())
        centers = new_centers
        if shift <= tol:
            break
    dists = ((features[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2)
    return np.argmin(dists, axis=1).astype(np.int64)


def _islands(members: np.ndarray, adjacency) -> list[list[int]]:
    member_set = set(int(i) for i in members)
    seen: set[int] = set()
    islands = []
    for start in sorted(member_set):
        if start in seen:
            continue
        stack, island = [start], []
        seen.add(start)
        while stack:
            cur = stack.pop()
            island.append(cur)
            for nb in adjacency[cur]:
                if nb in member_set and nb not in seen:
                    seen.add(nb)
                    stack.append(nb)
        islands.append(sorted(island))
    return islands


def _repair_connectivity(labels: np.ndarray, adjacency, max_passes: int = 10) -> np.ndarray:
    """Reassign every island smaller than its label's largest island to the
    majority neighboring label; islands with no neighbors (whole mesh
    components) get fresh labels. Iterated to fixpoint."""
    labels = labels.copy()
    for _ in range(max_passes):
        changed = False
        for lab in sorted(set(labels.tolist())):
            members = np.flatnonzero(labels == lab)
            islands = _islands(members, adjacency)
            if len(islands) <= 1:
                continue
            islands.sort(key=lambda isl: (-len(isl), isl[0]))
            for isl in islands[1:]:
                votes: dict[int, int] = {}
                for t in isl:
                    for nb in adjacency[t]:
                        nb_lab = int(labels[nb])
                        if nb_lab != lab:
                            votes[nb_lab] = votes.get(nb_lab, 0) + 1
                if votes:
                    new_lab = max(sorted(votes), key=lambda c: votes[c])
                else:
                    new_lab = int(labels.max()) + 1
                labels[isl] = new_lab
                changed = True
        if not changed:
            break
    # compact to [0, k) in order of first appearance
    _, compacted = np.unique(labels, return_inverse=True)
    order = {}
    out = np.empty_like(labels)
    for i, lab in enumerate(compacted):
        if lab not in order:
            order[lab] = len(order)
        out[i] = order[lab]
    return out


def segment_auto(mesh: TriMesh, delta: float = 0.5, k: int | None = None,
                 seed: int = 42, k_max: int = 10) -> Segmentation:
    """Cluster triangles on the spectral embedding; deterministic for a
    fixed (mesh, delta, k, seed)."""
    method = "auto" if k is None else "forced-k"
    if len(mesh.triangles) == 1 or k == 1:
        return Segmentation(np.zeros(len(mesh.triangles), dtype=np.int64), 1, method)

    graph = build_dual_graph(mesh, delta)
    embedding = spectral_embed(graph, k_max=max(k_max, k or 1))
    if k is None:
        k = select_k(embedding, k_max)
    k = max(1, min(k, graph.node_count))

    features = embedding.eigenvectors[:, :k]
    rng = np.random.default_rng(seed)
    labels = _kmeans(features, k, rng)
    labels = _repair_connectivity(labels, graph.adjacency())
    return Segmentation(labels, int(labels.max()) + 1, method)


def segments_from_labels(mesh: TriMesh, segmentation: Segmentation,
                         id_base: str = "seg") -> SegmentSet:
    """Extract one sub-mesh per label (labels index the mesh's triangles)."""
    segments = []
    for lab in range(segmentation.k):
        keep = segmentation.labels == lab
        tris = mesh.triangles[keep]
        mats = mesh.materials[keep] if mesh.materials is not None else None
        used, reindexed = np.unique(tris, return_inverse=True)
        part = TriMesh.validate(mesh.vertices[used], reindexed.reshape(-1, 3), mats)
        segments.append(Segment(f"{id_base}.g{lab}", part, f"auto-{lab}"))
    return SegmentSet(segments=segments, provenance="automatic")


class SpectralMeshSegmenter(BaseEstimator, ClusterMixin):
    """scikit-learn style front end for :func:`segment_auto`.

    ``fit`` takes a :class:`~idikit.mesh.TriMesh` and exposes per-triangle
    ``labels_``; composes with sklearn pipelines and `get_params`."""

    def __init__(self, delta: float = 0.5, k: int | None = None,
                 k_max: int = 10, seed: int = 42):
        self.delta = delta
        self.k = k
        self.k_max = k_max
        self.seed = seed

    def fit(self, X: TriMesh, y=None):
        result = segment_auto(X, delta=self.delta, k=self.k,
                              seed=self.seed, k_max=self.k_max)
        self.labels_ = result.labels
        self.k_ = result.k
        self.method_ = result.method
        return self
