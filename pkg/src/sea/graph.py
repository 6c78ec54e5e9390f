"""Weighted undirected graphs and their Laplacians."""

from __future__ import annotations

import numpy as np

from .errors import DimensionMismatch, ZeroDegreeNode
from .sparse import SparseMatrix

__all__ = [
    "WeightedGraph",
    "build_laplacian",
    "normalize_laplacian",
    "connected_components",
]


class WeightedGraph:
    """Undirected weighted graph: node count plus an edge list with p < q.

    Edges are kept as three parallel arrays sorted lexicographically by
    (p, q), all weights strictly positive, no self-loops, no duplicates.
    """

    __slots__ = ("n", "p", "q", "w")

    def __init__(self, n, p, q, w):
        self.n = int(n)
        self.p = np.asarray(p, dtype=np.int64)
        self.q = np.asarray(q, dtype=np.int64)
        self.w = np.asarray(w, dtype=np.float64)
        if not (self.p.shape == self.q.shape == self.w.shape):
            raise DimensionMismatch("edge arrays must align")
        self._validate()

    def _validate(self):
        if self.num_edges == 0:
            return
        if self.p.min(initial=0) < 0 or self.q.max(initial=-1) >= self.n:
            raise DimensionMismatch("node id out of range")
        if np.any(self.p >= self.q):
            raise DimensionMismatch("edges must satisfy p < q")
        if np.any(self.w <= 0):
            raise DimensionMismatch("edge weights must be strictly positive")
        order = np.lexsort((self.q, self.p))
        if not np.array_equal(order, np.arange(len(order))):
            raise DimensionMismatch("edges must be sorted by (p, q)")
        key = self.p * self.n + self.q
        if np.any(np.diff(key) == 0):
            raise DimensionMismatch("duplicate edges")

    @classmethod
    def from_edges(cls, n, edges) -> "WeightedGraph":
        """Build from (p, q, w) triples; duplicates are merged by summing weights."""
        if len(edges) == 0:
            return cls(n, [], [], [])
        arr = np.asarray(
            [(min(p, q), max(p, q), w) for p, q, w in edges], dtype=np.float64
        )
        p = arr[:, 0].astype(np.int64)
        q = arr[:, 1].astype(np.int64)
        w = arr[:, 2]
        if np.any(p == q):
            raise DimensionMismatch("self-loops are not allowed")
        key = p * int(n) + q
        order = np.argsort(key, kind="stable")
        key, p, q, w = key[order], p[order], q[order], w[order]
        uniq, inverse = np.unique(key, return_inverse=True)
        merged_w = np.zeros(len(uniq))
        np.add.at(merged_w, inverse, w)
        first = np.searchsorted(key, uniq)
        return cls(n, p[first], q[first], merged_w)

    @property
    def num_edges(self) -> int:
        return int(self.p.shape[0])

    def edge_list(self):
        """Edges as a list of (p, q, w) tuples."""
        return [
            (int(a), int(b), float(c)) for a, b, c in zip(self.p, self.q, self.w)
        ]

    def edge_pairs(self) -> np.ndarray:
        """(m, 2) array of endpoint pairs, sorted by (p, q)."""
        return np.stack([self.p, self.q], axis=1)

    def degrees(self) -> np.ndarray:
        deg = np.zeros(self.n)
        np.add.at(deg, self.p, self.w)
        np.add.at(deg, self.q, self.w)
        return deg

    def with_weights(self, w: np.ndarray) -> "WeightedGraph":
        """Same topology, new weights (positions align with the edge arrays)."""
        return WeightedGraph(self.n, self.p, self.q, w)

    def adjacency(self) -> SparseMatrix:
        rows = np.concatenate([self.p, self.q])
        cols = np.concatenate([self.q, self.p])
        vals = np.concatenate([self.w, self.w])
        return SparseMatrix.from_coo(self.n, rows, cols, vals, symmetric=True)

    def __repr__(self):
        return f"WeightedGraph(n={self.n}, edges={self.num_edges})"


def build_laplacian(g: WeightedGraph) -> SparseMatrix:
    """Combinatorial Laplacian: -w(p,q) off the diagonal, weighted degree on it."""
    deg = g.degrees()
    diag_nodes = np.nonzero(deg)[0]
    rows = np.concatenate([g.p, g.q, diag_nodes])
    cols = np.concatenate([g.q, g.p, diag_nodes])
    vals = np.concatenate([-g.w, -g.w, deg[diag_nodes]])
    return SparseMatrix.from_coo(g.n, rows, cols, vals, symmetric=True)


def normalize_laplacian(lap: SparseMatrix) -> SparseMatrix:
    """Symmetric normalization D^(-1/2) L D^(-1/2); unit diagonal afterwards."""
    deg = lap.diagonal()
    zero = np.nonzero(deg <= 0)[0]
    if zero.size:
        raise ZeroDegreeNode(int(zero[0]))
    inv_sqrt = 1.0 / np.sqrt(deg)
    scaled = lap.to_scipy().multiply(inv_sqrt[:, None]).multiply(inv_sqrt[None, :])
    return SparseMatrix.from_scipy(scaled, symmetric=True)


def connected_components(g: WeightedGraph) -> np.ndarray:
    """Component labels in [0, c); labels ordered by smallest member node id."""
    parent = np.arange(g.n, dtype=np.int64)

    def find(a):
        root = a
        while parent[root] != root:
            root = parent[root]
        while parent[a] != root:
            parent[a], a = root, parent[a]
        return root

    for a, b in zip(g.p, g.q):
        ra, rb = find(a), find(b)
        if ra != rb:
            parent[max(ra, rb)] = min(ra, rb)

    roots = np.array([find(i) for i in range(g.n)], dtype=np.int64)
    _, labels = np.unique(roots, return_inverse=True)
    return labels.astype(np.int64)
