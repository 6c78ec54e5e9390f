"""Exact k-nearest-neighbor graph construction over dense feature matrices.

Search is brute force (the target scale is a few thousand rows, where exact
O(n^2 d) search is both fast enough and trivially deterministic). Distances
are computed in row blocks to bound the memory of the pairwise matrix, and
neighbor selection sorts on (distance, node id) so exact ties — routine with
binary bag-of-words features — resolve to the smaller id.
"""

from __future__ import annotations

import numpy as np

from .errors import DegenerateFeatures, DimensionMismatch, InvalidK
from .graph import WeightedGraph

__all__ = ["as_feature_matrix", "build_knn"]

_BLOCK_ROWS = 512


def as_feature_matrix(data) -> np.ndarray:
    """Validate and return an (n, d) float64 feature matrix.

    Rejects NaN/Inf entries and fewer than two rows.
    """
    f = np.ascontiguousarray(data, dtype=np.float64)
    if f.ndim != 2:
        raise DimensionMismatch("feature matrix must be 2-D")
    if f.shape[0] < 2:
        raise DimensionMismatch("feature matrix needs at least two rows")
    if not np.isfinite(f).all():
        raise DimensionMismatch("feature matrix contains NaN or Inf")
    return f


def _distance_block(f: np.ndarray, start: int, stop: int, metric: str) -> np.ndarray:
    """Distances from rows [start, stop) to all rows (squared for euclidean)."""
    if metric == "euclidean":
        sq = np.einsum("ij,ij->i", f, f)
        d = sq[start:stop, None] + sq[None, :] - 2.0 * (f[start:stop] @ f.T)
        np.maximum(d, 0.0, out=d)
        return d
    norms = np.linalg.norm(f, axis=1)
    unit = f / np.where(norms > 0, norms, 1.0)[:, None]
    return 1.0 - unit[start:stop] @ unit.T


def _count_identical_rows(f: np.ndarray) -> int:
    """Number of distinct rows under exact equality."""
    return len({row.tobytes() for row in f})


def build_knn(
    features,
    k: int,
    metric: str = "euclidean",
    weights: str = "unit",
) -> WeightedGraph:
    """Union-symmetrized kNN graph over the rows of ``features``.

    An edge (p, q) is kept iff q is among p's k nearest rows or vice versa.
    Distance ties break toward the smaller node id. ``weights="unit"`` gives
    every edge weight 1; ``weights="gaussian"`` applies exp(-d^2 / (2 sigma^2))
    with sigma the mean selected-neighbor distance.
    """
    f = as_feature_matrix(features)
    n = f.shape[0]
    if metric not in ("euclidean", "cosine"):
        raise InvalidK(f"unknown metric {metric!r}")
    if weights not in ("unit", "gaussian"):
        raise InvalidK(f"unknown weight scheme {weights!r}")
    if not 1 <= k < n:
        raise InvalidK(f"k={k} outside [1, {n - 1}]")

    ids = np.arange(n)
    neighbor_ids = np.empty((n, k), dtype=np.int64)
    neighbor_dist = np.empty((n, k))
    for start in range(0, n, _BLOCK_ROWS):
        stop = min(start + _BLOCK_ROWS, n)
        d = _distance_block(f, start, stop, metric)
        d[ids[: stop - start], ids[start:stop]] = np.inf  # exclude self
        order = np.lexsort((np.broadcast_to(ids, d.shape), d), axis=1)[:, :k]
        neighbor_ids[start:stop] = order
        neighbor_dist[start:stop] = np.take_along_axis(d, order, axis=1)

    if metric == "euclidean":
        np.sqrt(neighbor_dist, out=neighbor_dist)

    # near-zero selected distances (or multiple all-zero rows under cosine,
    # which land at distance 1 from everything) flag possible identical rows
    saw_duplicate = bool(np.any(neighbor_dist <= 1e-12))
    if metric == "cosine" and not saw_duplicate:
        saw_duplicate = np.count_nonzero(np.linalg.norm(f, axis=1) == 0) > 1

    if saw_duplicate:
        distinct = _count_identical_rows(f)
        if distinct < n and k > distinct - 1:
            raise DegenerateFeatures(
                f"k={k} exceeds distinct rows minus one ({distinct - 1})"
            )

    src = np.repeat(ids, k)
    dst = neighbor_ids.reshape(-1)
    lo = np.minimum(src, dst)
    hi = np.maximum(src, dst)
    uniq_key, first = np.unique(lo * n + hi, return_index=True)
    edge_p = uniq_key // n
    edge_q = uniq_key % n

    if weights == "unit":
        edge_w = np.ones(edge_p.shape[0])
    else:
        sigma = max(float(np.mean(neighbor_dist)), 1e-300)
        dist = neighbor_dist.reshape(-1)[first]
        edge_w = np.maximum(np.exp(-(dist**2) / (2.0 * sigma**2)), 1e-300)

    return WeightedGraph(n, edge_p, edge_q, edge_w)
