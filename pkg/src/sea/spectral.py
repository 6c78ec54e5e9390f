"""Pencil eigensolver, weighted spectral embedding, and edge vulnerability scores.

Given two Laplacians — one from a kNN graph over the raw input features, one
from a kNN graph over the model's latent representations — the top-s
generalized eigenpairs of the pencil measure how strongly the model's
transformation stretches input-manifold directions. Edges whose endpoints sit
far apart in the resulting weighted eigen-embedding are the fragile ones.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as la

from .errors import (
    EmptyEdgeSet,
    InvalidFraction,
    NodeOutOfRange,
    NoConvergence,
    SubspaceTooLarge,
)
from .graph import WeightedGraph, connected_components
from .solver import DeflationBasis, cg_solve_block
from .sparse import SparseMatrix

__all__ = [
    "SpectralEmbedding",
    "EdgeScore",
    "generalized_eigenpairs",
    "spade_score",
    "spade_scores",
    "rank_and_select",
    "write_scores_csv",
]

_BLOCK_EXTRA = 8
_MAX_OUTER = 500
_EIG_CHANGE_TOL = 1e-9
_REG_SCALE = 1e-8


@dataclass
class SpectralEmbedding:
    """Top-s eigenpairs of the pencil plus the sqrt-eigenvalue-weighted subspace.

    ``eigenvalues`` are sorted descending; ``eigenvectors`` is (n, s) with
    column i the eigenvector for eigenvalue i, orthonormal in the latent-
    Laplacian inner product and orthogonal to the deflation basis;
    ``subspace`` column i is eigenvector i scaled by sqrt(max(eigenvalue, 0)).
    """

    s: int
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    subspace: np.ndarray
    deflation: DeflationBasis = field(repr=False)

    @property
    def n(self) -> int:
        return self.eigenvectors.shape[0]


@dataclass(frozen=True)
class EdgeScore:
    edge: tuple[int, int]
    score: float


def _component_indicator_complement(labels: np.ndarray) -> np.ndarray:
    """Orthonormal basis of span{component indicators} minus the constant vector."""
    n = labels.shape[0]
    comps = np.unique(labels)
    cols = [np.full(n, 1.0 / np.sqrt(n))]
    for c in comps:
        ind = (labels == c).astype(np.float64)
        cols.append(ind / np.linalg.norm(ind))
    raw = np.stack(cols, axis=1)
    q, r = la.qr(raw, mode="economic")
    # drop the leading column (the constant) and any rank-deficient tail
    keep = np.abs(np.diag(r)) > 1e-12
    return q[:, keep][:, 1:]


def _graph_from_pattern(mat: SparseMatrix) -> WeightedGraph:
    """Off-diagonal sparsity pattern of a symmetric matrix, as a unit graph."""
    coo = mat.to_scipy().tocoo()
    mask = coo.row < coo.col
    p, q = coo.row[mask], coo.col[mask]
    order = np.lexsort((q, p))
    return WeightedGraph(mat.n, p[order], q[order], np.ones(mask.sum()))


class _PencilOperator:
    """Applies latent_lap^+ @ input_lap with deflation, regularizing on demand."""

    def __init__(self, input_lap, latent_lap, cg_tol, cg_max_iter):
        self.input_lap = input_lap
        self.cg_tol = cg_tol
        self.cg_max_iter = cg_max_iter
        self.deflation = DeflationBasis.constant_vector(latent_lap.n)

        labels = connected_components(_graph_from_pattern(latent_lap))
        self.regularized = labels.max() > 0
        if self.regularized:
            gamma = _REG_SCALE * latent_lap.trace() / latent_lap.n
            self.gamma = float(gamma)
            self.latent_lap = latent_lap.add_diagonal(self.gamma)
            # exact eigenspace of latent_lap + gamma*I at eigenvalue gamma:
            # solving on it analytically keeps CG away from a ~1/gamma
            # condition number; the result equals the exact regularized solve
            self.indicator_basis = _component_indicator_complement(labels)
        else:
            self.gamma = 0.0
            self.latent_lap = latent_lap
            self.indicator_basis = None

        if self.indicator_basis is not None and self.indicator_basis.shape[1]:
            combined = np.concatenate(
                [self.deflation.vectors, self.indicator_basis], axis=1
            )
            self._cg_deflation = DeflationBasis(combined)
        else:
            self._cg_deflation = self.deflation

    def regularize(self):
        """Fallback when CG stalls on a formally connected but ill-posed graph."""
        if self.regularized:
            raise NoConvergence(self.cg_max_iter, float("nan"))
        gamma = _REG_SCALE * self.latent_lap.trace() / self.latent_lap.n
        self.gamma = float(gamma)
        self.latent_lap = self.latent_lap.add_diagonal(self.gamma)
        self.regularized = True

    def apply(self, block: np.ndarray, warm: np.ndarray | None) -> np.ndarray:
        rhs = self.input_lap.matmat(block)
        sol = cg_solve_block(
            self.latent_lap,
            rhs,
            self._cg_deflation,
            tol=self.cg_tol,
            max_iter=self.cg_max_iter,
            x0=warm,
        )
        if self.indicator_basis is not None and self.indicator_basis.shape[1]:
            coeff = self.indicator_basis.T @ rhs
            sol = sol + self.indicator_basis @ (coeff / self.gamma)
        return sol

    def latent_product(self, block: np.ndarray) -> np.ndarray:
        return self.latent_lap.matmat(block)


def _latent_orthonormalize(z: np.ndarray, op: _PencilOperator) -> np.ndarray:
    """Make the block orthonormal in the latent-Laplacian inner product."""
    gram = z.T @ op.latent_product(z)
    gram = 0.5 * (gram + gram.T)
    # Cholesky with a growing shift if the block has nearly dependent columns
    shift = 0.0
    scale = max(np.max(np.abs(gram)), 1e-300)
    for _ in range(60):
        try:
            chol = la.cholesky(gram + shift * np.eye(gram.shape[0]), lower=False)
            break
        except la.LinAlgError:
            shift = max(shift * 10.0, scale * 1e-15)
    else:
        raise NoConvergence(0, float("nan"))
    return la.solve_triangular(chol, z.T, trans="T", lower=False).T


def generalized_eigenpairs(
    input_lap: SparseMatrix,
    latent_lap: SparseMatrix,
    s: int,
    tol: float = 1e-8,
    seed: int = 0,
) -> SpectralEmbedding:
    """Top-s eigenpairs of the pencil (input_lap, latent_lap).

    Blocked orthogonal iteration on the pseudoinverse action: each sweep
    applies latent_lap^+ @ input_lap to a block of s + 8 vectors via deflated
    CG, re-orthonormalizes in the latent inner product, and extracts Ritz
    pairs. Iteration stops once the top-s residuals satisfy
    ||input_lap v - eig * latent_lap v|| <= tol * ||input_lap||_F with v scaled
    to unit 2-norm (eigenvalue stagnation below 1e-9 relative triggers the
    residual check early).
    """
    n = input_lap.n
    if latent_lap.n != n:
        raise SubspaceTooLarge("pencil matrices must have equal size")
    if s < 1 or s > n - 1:
        raise SubspaceTooLarge(f"s={s} outside [1, n-1] with n={n}")

    cg_tol = min(1e-8, max(tol * 1e-2, 1e-13))
    op = _PencilOperator(input_lap, latent_lap, cg_tol, cg_max_iter=20 * n + 2000)
    block_size = min(s + _BLOCK_EXTRA, n - 1)
    fro = input_lap.frobenius_norm()
    residual_target = tol * max(fro, 1e-300)

    rng = np.random.default_rng(seed)
    block = rng.standard_normal((n, block_size))
    block = op.deflation.project_out(block)
    block = _latent_orthonormalize(block, op)

    prev_vals = None
    warm = None
    top = None
    converged = False
    for sweep in range(_MAX_OUTER):
        try:
            z = op.apply(block, warm)
        except NoConvergence:
            op.regularize()
            warm = None
            z = op.apply(block, warm)
        z = op.deflation.project_out(z)
        z = _latent_orthonormalize(z, op)

        # Rayleigh-Ritz in the latent inner product (projected B is identity)
        interaction = z.T @ op.input_lap.matmat(z)
        interaction = 0.5 * (interaction + interaction.T)
        ritz_vals, ritz_vecs = la.eigh(interaction)
        order = np.argsort(ritz_vals)[::-1]
        ritz_vals = ritz_vals[order]
        block = z @ ritz_vecs[:, order]
        top = ritz_vals[:s]
        # eigenvector estimates scale by their eigenvalues under one more
        # pseudoinverse application; pre-scaling makes a good CG warm start
        warm = block * ritz_vals[None, :]

        stalled = False
        if prev_vals is not None:
            change = np.abs(top - prev_vals) / np.maximum(np.abs(top), 1e-300)
            stalled = np.max(change) < max(_EIG_CHANGE_TOL, tol)
        prev_vals = top
        if stalled or sweep % 8 == 7 or sweep == _MAX_OUTER - 1:
            residuals = _pencil_residuals(op, block[:, :s], top)
            if np.max(residuals) <= residual_target:
                converged = True
                break

    if not converged:
        residuals = _pencil_residuals(op, block[:, :s], top)
        if np.max(residuals) > residual_target:
            raise NoConvergence(_MAX_OUTER, float(np.max(residuals)))

    vectors = block[:, :s]
    values = top.copy()
    subspace = vectors * np.sqrt(np.maximum(values, 0.0))[None, :]
    return SpectralEmbedding(
        s=s,
        eigenvalues=values,
        eigenvectors=vectors,
        subspace=subspace,
        deflation=op.deflation,
    )


def _pencil_residuals(op: _PencilOperator, vectors, values) -> np.ndarray:
    # measured on unit-2-norm copies: B-orthonormal vectors grow like
    # 1/sqrt(gamma) under regularization, which would put the absolute
    # residual floor above any fixed target
    r = op.input_lap.matmat(vectors) - op.latent_product(vectors) * values[None, :]
    scale = np.maximum(np.linalg.norm(vectors, axis=0), 1e-300)
    return np.linalg.norm(r, axis=0) / scale


def spade_score(emb: SpectralEmbedding, edge: tuple[int, int]) -> float:
    """Squared spectral distance between an edge's endpoints in the embedding.

    Equals sum_i eigenvalue_i * (v_i(p) - v_i(q))^2; larger means the edge is
    less robust to perturbation.
    """
    p, q = edge
    if p == q or not (0 <= p < emb.n) or not (0 <= q < emb.n):
        raise NodeOutOfRange(f"invalid edge ({p}, {q}) for n={emb.n}")
    diff = emb.subspace[p] - emb.subspace[q]
    return float(diff @ diff)


def spade_scores(emb: SpectralEmbedding, edges: np.ndarray) -> np.ndarray:
    """Vectorized :func:`spade_score` over an (m, 2) array of edges."""
    edges = np.asarray(edges, dtype=np.int64)
    if edges.size == 0:
        return np.zeros(0)
    if edges.min() < 0 or edges.max() >= emb.n:
        raise NodeOutOfRange("edge endpoint outside [0, n)")
    diff = emb.subspace[edges[:, 0]] - emb.subspace[edges[:, 1]]
    return np.einsum("ij,ij->i", diff, diff)


def rank_and_select(scores: list[EdgeScore], fraction: float) -> list[EdgeScore]:
    """Top ceil(fraction * len(scores)) edges by descending score.

    Ties break by (p, q) lexicographic ascending; the returned list is in
    descending-score order.
    """
    if not scores:
        raise EmptyEdgeSet("no edges to rank")
    if not 0.0 < fraction <= 1.0:
        raise InvalidFraction(f"fraction must be in (0, 1], got {fraction}")
    count = int(np.ceil(fraction * len(scores)))
    ranked = sorted(scores, key=lambda e: (-e.score, e.edge))
    return ranked[:count]


def write_scores_csv(path, scores: list[EdgeScore]) -> None:
    """Dump scores as ``p,q,score`` rows, descending score, 17 significant digits."""
    ranked = sorted(scores, key=lambda e: (-e.score, e.edge))
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("p,q,score\n")
        for item in ranked:
            fh.write(f"{item.edge[0]},{item.edge[1]},{item.score:.17g}\n")
