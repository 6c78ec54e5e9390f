"""Deflated conjugate-gradient solves and a dense generalized eigen-oracle.

The CG solver realizes the pseudoinverse action of a PSD Laplacian: it
projects the right-hand side against a deflation basis spanning the null
space (or any subspace to exclude) and returns the minimum-norm solution on
the orthogonal complement.
"""

from __future__ import annotations

import numpy as np
import scipy.linalg as la

from .errors import DimensionMismatch, NoConvergence, OracleScaleExceeded
from .sparse import SparseMatrix

__all__ = ["DeflationBasis", "cg_solve", "cg_solve_block", "dense_generalized_eig"]

_ORACLE_MAX_N = 512


class DeflationBasis:
    """Orthonormal set of vectors spanning the subspace projected out of solves."""

    __slots__ = ("vectors",)

    def __init__(self, vectors):
        v = np.asarray(vectors, dtype=np.float64)
        if v.ndim == 1:
            v = v[:, None]
        if v.ndim != 2:
            raise DimensionMismatch("deflation vectors must form an (n, d) array")
        gram = v.T @ v
        if not np.allclose(gram, np.eye(v.shape[1]), atol=1e-10):
            raise DimensionMismatch("deflation vectors must be orthonormal")
        self.vectors = v

    @classmethod
    def constant_vector(cls, n: int) -> "DeflationBasis":
        return cls(np.full((n, 1), 1.0 / np.sqrt(n)))

    @classmethod
    def from_component_labels(cls, labels: np.ndarray) -> "DeflationBasis":
        """One normalized indicator vector per connected component."""
        labels = np.asarray(labels)
        n = labels.shape[0]
        comps = np.unique(labels)
        v = np.zeros((n, comps.shape[0]))
        for j, c in enumerate(comps):
            members = labels == c
            v[members, j] = 1.0 / np.sqrt(members.sum())
        return cls(v)

    @property
    def dim(self) -> int:
        return self.vectors.shape[1]

    @property
    def n(self) -> int:
        return self.vectors.shape[0]

    def project_out(self, x: np.ndarray) -> np.ndarray:
        """Remove the deflated components: x - V (V^T x). Works on vectors or blocks."""
        return x - self.vectors @ (self.vectors.T @ x)


def cg_solve(
    a: SparseMatrix,
    b: np.ndarray,
    deflate: DeflationBasis | None,
    tol: float = 1e-10,
    max_iter: int = 5000,
    x0: np.ndarray | None = None,
) -> np.ndarray:
    """Solve a @ x = P b on the complement of the deflation basis.

    ``a`` must be symmetric PSD and nonsingular on the complement. Returns x
    orthogonal to every deflation vector with ||a x - P b|| <= tol * ||P b||,
    i.e. the pseudoinverse action restricted to the complement.

    Raises NoConvergence when max_iter is exhausted; the caller may
    regularize and retry.
    """
    x = cg_solve_block(
        a,
        b.reshape(-1, 1),
        deflate,
        tol=tol,
        max_iter=max_iter,
        x0=None if x0 is None else x0.reshape(-1, 1),
    )
    return x[:, 0]


def cg_solve_block(
    a: SparseMatrix,
    b: np.ndarray,
    deflate: DeflationBasis | None,
    tol: float = 1e-10,
    max_iter: int = 5000,
    x0: np.ndarray | None = None,
) -> np.ndarray:
    """Multi-right-hand-side variant of :func:`cg_solve`.

    Each column runs an independent Jacobi-preconditioned CG recurrence; the
    columns share sparse products for speed but there is no cross-column
    coupling, so results match per-column single solves.
    """
    b = np.asarray(b, dtype=np.float64)
    if b.ndim != 2 or b.shape[0] != a.n:
        raise DimensionMismatch(f"rhs block must be (n, k) with n={a.n}")
    m = a.to_scipy()

    def project(z):
        return deflate.project_out(z) if deflate is not None else z

    rhs = project(b)
    rhs_norm = np.linalg.norm(rhs, axis=0)
    target = tol * rhs_norm

    diag = a.diagonal().copy()
    inv_diag = np.where(diag > 1e-300, 1.0 / np.maximum(diag, 1e-300), 1.0)

    if x0 is None:
        x = np.zeros_like(rhs)
        r = rhs.copy()
    else:
        x = project(np.array(x0, dtype=np.float64, copy=True))
        r = rhs - project(m @ x)

    z = inv_diag[:, None] * r
    p = z.copy()
    rz = np.einsum("ij,ij->j", r, z)
    active = np.linalg.norm(r, axis=0) > target

    iterations = 0
    for iterations in range(1, max_iter + 1):
        if not active.any():
            break
        ap = project(m @ p)
        pap = np.einsum("ij,ij->j", p, ap)
        safe = np.where((pap > 0) & active, pap, 1.0)
        alpha = np.where(active, rz / safe, 0.0)
        x += alpha * p
        r -= alpha * ap
        z = inv_diag[:, None] * r
        rz_new = np.einsum("ij,ij->j", r, z)
        beta = np.where(active, rz_new / np.where(rz > 0, rz, 1.0), 0.0)
        p = z + beta * p
        p[:, ~active] = 0.0
        rz = rz_new
        active = np.linalg.norm(r, axis=0) > target
    else:
        if active.any():
            worst = float(np.max(np.linalg.norm(r, axis=0)[active]))
            raise NoConvergence(max_iter, worst)

    # one final projection guards against drift accumulated over many iterations
    return project(x)


def _complement_basis(n: int, deflate: DeflationBasis | None) -> np.ndarray:
    """Orthonormal basis of the complement of the deflated subspace."""
    if deflate is None or deflate.dim == 0:
        return np.eye(n)
    full, _ = la.qr(
        np.concatenate([deflate.vectors, np.eye(n)], axis=1), mode="economic"
    )
    # first deflate.dim columns span the deflation subspace
    return full[:, deflate.dim : n]


def dense_generalized_eig(
    a: np.ndarray,
    b: np.ndarray,
    deflate: DeflationBasis | None,
) -> tuple[np.ndarray, np.ndarray]:
    """All eigenpairs of the pencil (a, b) on the complement of the deflation basis.

    Dense test oracle, capped at n = 512. Requires null(b) within the span of
    the deflation vectors so the projected b is positive definite. Returns
    (values, vectors) with values sorted descending and vectors b-orthonormal.
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    n = a.shape[0]
    if a.shape != (n, n) or b.shape != (n, n):
        raise DimensionMismatch("pencil matrices must be square and equal-sized")
    if n > _ORACLE_MAX_N:
        raise OracleScaleExceeded(f"oracle capped at n={_ORACLE_MAX_N}, got {n}")

    basis = _complement_basis(n, deflate)
    a_p = basis.T @ a @ basis
    b_p = basis.T @ b @ basis
    a_p = 0.5 * (a_p + a_p.T)
    b_p = 0.5 * (b_p + b_p.T)
    vals, vecs = la.eigh(a_p, b_p)
    order = np.argsort(vals)[::-1]
    return vals[order], basis @ vecs[:, order]
