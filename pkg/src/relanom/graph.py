"""Kernel similarity graphs over numeric observations.

Observations become vertices; the edge weight between two observations is
the radial basis similarity exp(-d(x_i, x_j)^2 / gamma).  Graphs are dense
by default; two sparsifiers are provided, a per-row k-nearest-neighbor
truncation and a global small-value threshold that preserves symmetry and
connectivity.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy import sparse
from scipy.spatial.distance import cdist

from .dataset import Dataset

__all__ = [
    "DistanceMetric",
    "SimilarityGraph",
    "pairwise_distances",
    "rbf_similarity_matrix",
    "knn_truncate",
    "threshold_sparsify",
    "max_symmetrize",
    "dump_graph",
]

DENSE_LIMIT = 20_000


class DistanceMetric(str, Enum):
    EUCLIDEAN = "euclidean"
    MANHATTAN = "manhattan"

    @property
    def cdist_name(self) -> str:
        return "euclidean" if self is DistanceMetric.EUCLIDEAN else "cityblock"


@dataclass(frozen=True)
class SimilarityGraph:
    """Similarity matrix plus the construction parameters.

    ``matrix`` is a dense ndarray or a CSR matrix whose stored entries
    equal the dense kernel values exactly; absent entries in the sparse
    case mean "no edge".  ``source`` keeps the (model-space) observations
    the graph was built from, so downstream scorers can evaluate the
    kernel against new points.
    """

    matrix: np.ndarray | sparse.csr_matrix
    gamma: float
    metric: DistanceMetric
    symmetric: bool
    source: Dataset
    drop_threshold: float | None = None

    @property
    def n(self) -> int:
        return self.matrix.shape[0]

    @property
    def is_sparse(self) -> bool:
        return sparse.issparse(self.matrix)


def pairwise_distances(data: Dataset, metric: DistanceMetric = DistanceMetric.EUCLIDEAN) -> np.ndarray:
    """Dense n x n distance matrix (zero diagonal, symmetric)."""
    return cdist(data.values, data.values, metric=metric.cdist_name)


def rbf_similarity_matrix(
    data: Dataset,
    gamma: float,
    metric: DistanceMetric = DistanceMetric.EUCLIDEAN,
) -> SimilarityGraph:
    """Dense similarity graph S_ij = exp(-d(x_i, x_j)^2 / gamma)."""
    if not (gamma > 0.0 and math.isfinite(gamma)):
        raise ValueError("gamma must be a positive finite real")
    if data.n < 2:
        raise ValueError("similarity graph needs at least 2 observations")
    if data.n > DENSE_LIMIT:
        raise ValueError(
            f"n = {data.n} exceeds the dense limit of {DENSE_LIMIT}; "
            "construct a k-nearest-neighbor graph instead"
        )
    if metric is DistanceMetric.EUCLIDEAN:
        sq = cdist(data.values, data.values, metric="sqeuclidean")
    else:
        d = cdist(data.values, data.values, metric="cityblock")
        sq = d * d
    s = np.exp(-sq / gamma)
    np.fill_diagonal(s, 1.0)
    return SimilarityGraph(s, gamma, metric, symmetric=True, source=data)


def knn_truncate(graph: SimilarityGraph, k: int) -> SimilarityGraph:
    """Directed sparsification: each row keeps its k most similar others.

    Ties break toward the smaller column index.  The diagonal is always
    retained.  The result is generally asymmetric.
    """
    if graph.is_sparse:
        raise ValueError("kNN truncation expects a dense graph")
    n = graph.n
    if not 1 <= k <= n - 1:
        raise ValueError(f"k must be in [1, {n - 1}], got {k}")
    s = graph.matrix
    masked = s.copy()
    np.fill_diagonal(masked, -np.inf)
    indptr = np.arange(0, (k + 1) * n + 1, k + 1)
    indices = np.empty(n * (k + 1), dtype=np.int64)
    values = np.empty(n * (k + 1), dtype=np.float64)
    for i in range(n):
        order = np.argsort(-masked[i], kind="stable")[:k]
        cols = np.sort(np.concatenate(([i], order)))
        base = i * (k + 1)
        indices[base : base + k + 1] = cols
        values[base : base + k + 1] = s[i, cols]
    mat = sparse.csr_matrix((values, indices, indptr), shape=(n, n))
    return SimilarityGraph(mat, graph.gamma, graph.metric, symmetric=False, source=graph.source)


def threshold_sparsify(graph: SimilarityGraph, drop_fraction: float) -> SimilarityGraph:
    """Drop the smallest symmetric off-diagonal pairs of a dense graph.

    Exactly floor(drop_fraction * n*(n-1)/2) pairs are removed, smallest
    values first (ties by index).  If removal disconnects the graph, the
    drop threshold is reduced, restoring the largest dropped pairs, until
    the graph is connected again.  The diagonal is always retained and
    kept entries equal the dense entries exactly.
    """
    if graph.is_sparse:
        raise ValueError("threshold sparsification expects a dense graph")
    if not graph.symmetric:
        raise ValueError("threshold sparsification expects a symmetric graph")
    if not 0.0 <= drop_fraction < 1.0:
        raise ValueError("drop_fraction must be in [0, 1)")
    n = graph.n
    s = graph.matrix
    rows, cols = np.triu_indices(n, k=1)
    vals = s[rows, cols]
    npairs = vals.size
    m_drop = int(math.floor(drop_fraction * npairs + 1e-9))
    order = np.lexsort((cols, rows, vals))  # ascending value, then (i, j)
    kept = order[m_drop:]
    dropped = order[:m_drop]

    uf = _UnionFind(n)
    for e in kept:
        uf.union(int(rows[e]), int(cols[e]))
    restored = 0
    while uf.components > 1 and restored < dropped.size:
        # Walk dropped pairs from the largest down, lowering the threshold.
        restored += 1
        e = dropped[dropped.size - restored]
        uf.union(int(rows[e]), int(cols[e]))
    if uf.components > 1:
        raise ValueError("graph cannot be made connected")
    if restored:
        kept = np.concatenate((dropped[dropped.size - restored :], kept))
        dropped = dropped[: dropped.size - restored]
    threshold = float(vals[dropped[-1]]) if dropped.size else None

    ki, kj = rows[kept], cols[kept]
    diag = np.arange(n)
    coo_i = np.concatenate((ki, kj, diag))
    coo_j = np.concatenate((kj, ki, diag))
    coo_v = np.concatenate((vals[kept], vals[kept], s[diag, diag]))
    mat = sparse.coo_matrix((coo_v, (coo_i, coo_j)), shape=(n, n)).tocsr()
    return SimilarityGraph(
        mat, graph.gamma, graph.metric, symmetric=True, source=graph.source,
        drop_threshold=threshold,
    )


def max_symmetrize(graph: SimilarityGraph) -> SimilarityGraph:
    """Keep an edge when either direction kept it (values are symmetric)."""
    if not graph.is_sparse:
        return graph
    m = graph.matrix.maximum(graph.matrix.T).tocsr()
    return SimilarityGraph(
        m, graph.gamma, graph.metric, symmetric=True, source=graph.source,
        drop_threshold=graph.drop_threshold,
    )


class _UnionFind:
    def __init__(self, n: int) -> None:
        self.parent = list(range(n))
        self.components = n

    def find(self, a: int) -> int:
        p = self.parent
        while p[a] != a:
            p[a] = p[p[a]]
            a = p[a]
        return a

    def union(self, a: int, b: int) -> None:
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            self.parent[ra] = rb
            self.components -= 1


def dump_graph(graph: SimilarityGraph, path) -> None:
    """Write stored entries as coordinate-format lines ``i,j,s_ij``.

    Indices are 0-based and values keep full precision; for sparse graphs
    only retained entries appear.
    """
    from .model_io import atomic_write_text

    lines = []
    if graph.is_sparse:
        mat = graph.matrix.tocoo()
        for i, j, v in zip(mat.row, mat.col, mat.data):
            lines.append(f"{i},{j},{float(v)!r}")
    else:
        for i in range(graph.n):
            row = graph.matrix[i]
            for j in range(graph.n):
                lines.append(f"{i},{j},{float(row[j])!r}")
    atomic_write_text(path, "\n".join(lines) + "\n")
