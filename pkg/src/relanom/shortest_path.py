"""Relative anomaly scoring by shortest paths to the most typical points.

The top-q fraction of observations by vertex degree form the "normal
set".  Every edge gets weight -ln s_ij, so a path's weight is the negated
log of its similarity product; the score of an observation is its
shortest-path distance to the normal set.  Normal observations score
exactly 0, and exp(-score) is the best similarity product achievable
along any path into the normal set.
"""

from __future__ import annotations

import heapq
import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy import sparse
from scipy.spatial.distance import cdist

from .dataset import Dataset
from .degree import VertexDegrees, vertex_degrees
from .graph import (
    DistanceMetric,
    SimilarityGraph,
    knn_truncate,
    max_symmetrize,
    rbf_similarity_matrix,
)
from .preprocess import FeatureTransform

__all__ = [
    "Ecdf",
    "ShortestPathModel",
    "select_normal_set",
    "path_weights",
    "multi_source_shortest_paths",
    "fit_shortest_path",
    "score_new_shortest_path",
    "score_batch_shortest_path",
]


@dataclass(frozen=True)
class Ecdf:
    """Right-continuous empirical CDF: F(t) = #{values <= t} / n."""

    sorted_values: np.ndarray

    @classmethod
    def from_values(cls, values: np.ndarray) -> "Ecdf":
        return cls(np.sort(np.asarray(values, dtype=np.float64)))

    def __call__(self, t) -> np.ndarray | float:
        r = np.searchsorted(self.sorted_values, t, side="right")
        out = r / self.sorted_values.size
        return float(out) if np.isscalar(t) else out


@dataclass(frozen=True)
class ShortestPathModel:
    vd: VertexDegrees
    ecdf: Ecdf
    q: float
    normal_set: np.ndarray
    ra_q: np.ndarray
    graph: SimilarityGraph
    transform: list[FeatureTransform] | None = None


def select_normal_set(vd: VertexDegrees | np.ndarray, q: float):
    """Indices whose vertex degree exceeds that of a 1-q share of the data.

    Membership: ecdf(vd_l) > 1 - q with the right-continuous ECDF, i.e.
    the top-q fraction by vertex degree, tied degrees entering or leaving
    together.  Returns ``(ecdf, indices)``; the set is never empty since
    the maximum always qualifies.
    """
    if not 0.0 < q < 1.0:
        raise ValueError("q must be in (0, 1)")
    values = vd.vd if isinstance(vd, VertexDegrees) else np.asarray(vd, dtype=np.float64)
    ecdf = Ecdf.from_values(values)
    members = np.nonzero(ecdf(values) > 1.0 - q)[0]
    return ecdf, members


def path_weights(graph: SimilarityGraph):
    """Edge-weight view -ln s_ij of a similarity graph.

    Weights are nonnegative because similarities lie in (0, 1]; stored
    nonpositive similarities are rejected.
    """
    if graph.is_sparse:
        mat = graph.matrix
        if np.any(mat.data <= 0.0):
            raise ValueError("similarities must be strictly positive")
        out = mat.copy()
        out.data = -np.log(mat.data)
        return out
    if np.any(graph.matrix <= 0.0):
        raise ValueError(
            "similarities must be strictly positive; an entry underflowed "
            "to zero at this gamma"
        )
    return -np.log(graph.matrix)


def multi_source_shortest_paths(weights, sources: np.ndarray) -> np.ndarray:
    """Dijkstra distances from the nearest of several sources.

    Equivalent to adding a virtual source with zero-weight edges to every
    listed vertex.  ``weights`` is a dense ndarray or CSR matrix of
    nonnegative edge weights; absent sparse entries mean "no edge".
    Unreachable vertices get +inf.
    """
    n = weights.shape[0]
    sources = np.asarray(sources, dtype=np.int64)
    if sources.size == 0:
        raise ValueError("at least one source vertex is required")
    dist = np.full(n, np.inf)
    dist[sources] = 0.0
    heap = [(0.0, int(s)) for s in sources]
    heapq.heapify(heap)
    done = np.zeros(n, dtype=bool)
    is_dense = not sparse.issparse(weights)
    while heap:
        d, u = heapq.heappop(heap)
        if done[u] or d > dist[u]:
            continue
        done[u] = True
        if is_dense:
            cand = d + weights[u]
            better = cand < dist
            better[u] = False
            for v in np.nonzero(better)[0]:
                dist[v] = cand[v]
                heapq.heappush(heap, (float(cand[v]), int(v)))
        else:
            row = slice(weights.indptr[u], weights.indptr[u + 1])
            for v, w in zip(weights.indices[row], weights.data[row]):
                nd = d + w
                if nd < dist[v]:
                    dist[v] = nd
                    heapq.heappush(heap, (float(nd), int(v)))
    return dist


def fit_shortest_path(
    data: Dataset,
    gamma: float,
    q: float,
    k: int | None = None,
    *,
    metric: DistanceMetric = DistanceMetric.EUCLIDEAN,
    transform: list[FeatureTransform] | None = None,
) -> ShortestPathModel:
    """Select the normal set by vertex degree, then run multi-source Dijkstra.

    Vertex degrees always come from the dense graph; when ``k`` is given
    the paths run on the k-nearest-neighbor graph, symmetrized by keeping
    an edge when either endpoint kept it.  Disconnected vertices score
    +inf and trigger a warning.
    """
    dense = rbf_similarity_matrix(data, gamma, metric)
    vd = vertex_degrees(dense)
    ecdf, normal = select_normal_set(vd, q)
    path_graph = dense if k is None else max_symmetrize(knn_truncate(dense, k))
    ra_q = multi_source_shortest_paths(path_weights(path_graph), normal)
    unreachable = int(np.sum(np.isinf(ra_q)))
    if unreachable:
        warnings.warn(
            f"{unreachable} observations are unreachable from the normal set; "
            "their scores are +inf",
            stacklevel=2,
        )
    return ShortestPathModel(
        vd=vd, ecdf=ecdf, q=q, normal_set=normal, ra_q=ra_q,
        graph=path_graph, transform=transform,
    )


def score_batch_shortest_path(model: ShortestPathModel, points: np.ndarray) -> np.ndarray:
    """One-hop extension: min over training rows of edge weight + ra_q.

    The new observation connects to every training row with weight
    -ln s(x, x_j) = d(x, x_j)^2 / gamma; its score is the cheapest entry
    point into the fitted distances.  Points must be in model space.
    """
    pts = np.atleast_2d(np.asarray(points, dtype=np.float64))
    training = model.graph.source.values
    gamma = model.graph.gamma
    if model.graph.metric is DistanceMetric.EUCLIDEAN:
        sq = cdist(pts, training, metric="sqeuclidean")
    else:
        d = cdist(pts, training, metric="cityblock")
        sq = d * d
    return np.min(sq / gamma + model.ra_q, axis=1)


def score_new_shortest_path(model: ShortestPathModel, x: np.ndarray) -> float:
    """Score one new observation (model space); larger = more anomalous."""
    return float(score_batch_shortest_path(model, np.atleast_2d(x))[0])
