"""Symmetric sparse matrices in compressed-row form.

The matrix kernels (matvec, dense block products) delegate to scipy.sparse;
this module owns the index-structure invariants and the small amount of
graph-specific construction logic built on top of them.
"""

from __future__ import annotations

import numpy as np
import scipy.sparse as sp

from .errors import DimensionMismatch

__all__ = ["SparseMatrix", "spmv"]


class SparseMatrix:
    """Square sparse matrix stored as CSR index arrays.

    Invariants: ``row_offsets`` has length n+1 and is monotone nondecreasing,
    column indices are sorted within each row, and no explicitly stored value
    is zero. ``symmetric`` records that (p, q) is present iff (q, p) is, with
    equal value.
    """

    __slots__ = ("n", "row_offsets", "col_indices", "values", "symmetric", "_csr")

    def __init__(self, n, row_offsets, col_indices, values, symmetric=False):
        self.n = int(n)
        self.row_offsets = np.asarray(row_offsets, dtype=np.int64)
        self.col_indices = np.asarray(col_indices, dtype=np.int64)
        self.values = np.asarray(values, dtype=np.float64)
        self.symmetric = bool(symmetric)
        if self.row_offsets.shape != (self.n + 1,):
            raise DimensionMismatch("row_offsets must have length n+1")
        if np.any(np.diff(self.row_offsets) < 0):
            raise DimensionMismatch("row_offsets must be monotone nondecreasing")
        if self.col_indices.shape != self.values.shape:
            raise DimensionMismatch("col_indices and values must align")
        self._csr = sp.csr_matrix(
            (self.values, self.col_indices, self.row_offsets), shape=(self.n, self.n)
        )

    @classmethod
    def from_coo(cls, n, rows, cols, vals, symmetric=False):
        """Build from triplets; duplicates are summed, zeros dropped, rows sorted."""
        m = sp.coo_matrix(
            (np.asarray(vals, dtype=np.float64), (rows, cols)), shape=(n, n)
        ).tocsr()
        m.sum_duplicates()
        m.eliminate_zeros()
        m.sort_indices()
        return cls(n, m.indptr, m.indices, m.data, symmetric=symmetric)

    @classmethod
    def from_scipy(cls, m, symmetric=False):
        m = m.tocsr().copy()
        m.sum_duplicates()
        m.eliminate_zeros()
        m.sort_indices()
        return cls(m.shape[0], m.indptr, m.indices, m.data, symmetric=symmetric)

    @classmethod
    def identity(cls, n):
        return cls.from_scipy(sp.identity(n, format="csr"), symmetric=True)

    @property
    def nnz(self) -> int:
        return int(self.values.shape[0])

    def to_scipy(self) -> sp.csr_matrix:
        return self._csr

    def to_dense(self) -> np.ndarray:
        return self._csr.toarray()

    def diagonal(self) -> np.ndarray:
        return self._csr.diagonal()

    def trace(self) -> float:
        return float(self._csr.diagonal().sum())

    def frobenius_norm(self) -> float:
        return float(np.sqrt(np.sum(self.values**2)))

    def is_symmetric(self, tol: float = 0.0) -> bool:
        """Check (p,q)/(q,p) pairing by comparing against the transpose."""
        diff = self._csr - self._csr.T
        if diff.nnz == 0:
            return True
        return bool(np.max(np.abs(diff.data)) <= tol)

    def matmat(self, block: np.ndarray) -> np.ndarray:
        """Product with a dense (n, k) block."""
        if block.shape[0] != self.n:
            raise DimensionMismatch(
                f"block has {block.shape[0]} rows, matrix is {self.n}x{self.n}"
            )
        return self._csr @ block

    def add_diagonal(self, shift: float) -> "SparseMatrix":
        """Return self + shift*I (used by the regularization fallback)."""
        m = (self._csr + shift * sp.identity(self.n, format="csr")).tocsr()
        return SparseMatrix.from_scipy(m, symmetric=self.symmetric)

    def scale(self, factor: float) -> "SparseMatrix":
        return SparseMatrix(
            self.n,
            self.row_offsets,
            self.col_indices,
            self.values * float(factor),
            symmetric=self.symmetric,
        )

    def __repr__(self):
        return f"SparseMatrix(n={self.n}, nnz={self.nnz}, symmetric={self.symmetric})"


def spmv(a: SparseMatrix, x: np.ndarray) -> np.ndarray:
    """Sparse matrix-vector product a @ x."""
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (a.n,):
        raise DimensionMismatch(f"vector of length {x.shape} against n={a.n}")
    return a.to_scipy() @ x
