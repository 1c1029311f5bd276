"""Dense linear-algebra kernels shared by every solver in the package.

Points are always rows: a data matrix is ``N x m`` with one point per row.
"""

import logging
from dataclasses import dataclass

import numpy as np

logger = logging.getLogger(__name__)

# Eigenvalues below -EIG_CLAMP * lambda_max are reported as a non-PSD input.
EIG_CLAMP = 1e-8


def as_data_matrix(v, nonnegative=False, name="matrix"):
    """Validate ``v`` as a finite 2-D float matrix and return a copy.

    Raises ``ValueError`` for empty, non-finite, or (when ``nonnegative``)
    negative input.
    """
    v = np.array(v, dtype=float)
    if v.ndim == 1:
        v = v[None, :]
    if v.ndim != 2 or v.shape[0] < 1 or v.shape[1] < 1:
        raise ValueError(f"{name} must be a non-empty 2-D array, got shape {v.shape}")
    if not np.all(np.isfinite(v)):
        raise ValueError(f"{name} contains non-finite entries")
    if nonnegative and np.any(v < 0):
        raise ValueError(f"{name} has negative entries (min {v.min():.6g})")
    return v


@dataclass(frozen=True)
class SvdResult:
    u: np.ndarray
    s: np.ndarray
    vt: np.ndarray

    @property
    def rank(self):
        return self.s.size

    def reconstruct(self):
        return (self.u * self.s) @ self.vt


def _fix_signs(u, vt):
    # Each left vector gets a non-negative sum (largest-magnitude entry
    # positive when the sum vanishes); Perron vectors come out non-negative.
    for c in range(u.shape[1]):
        col = u[:, c]
        total = col.sum()
        if abs(total) <= 1e-12 * np.abs(col).sum():
            total = col[np.argmax(np.abs(col))]
        if total < 0:
            u[:, c] = -col
            vt[c] = -vt[c]
    return u, vt


def svd(matrix, rank):
    """Top-``rank`` singular triplets of ``matrix``.

    Singular values come back non-increasing and the sign of each pair is
    fixed deterministically, so a non-negative rank-one input yields
    non-negative singular vectors.
    """
    a = as_data_matrix(matrix)
    rank = int(rank)
    if rank < 1:
        raise ValueError("rank must be >= 1")
    if rank > min(a.shape):
        raise ValueError(f"rank {rank} exceeds min(N, m) = {min(a.shape)}")
    u, s, vt = np.linalg.svd(a, full_matrices=False)
    u, s, vt = u[:, :rank].copy(), s[:rank].copy(), vt[:rank].copy()
    u, vt = _fix_signs(u, vt)
    return SvdResult(u, s, vt)


def truncated_svd_error(matrix, rank):
    """Frobenius error of the best rank-``rank`` approximation."""
    a = as_data_matrix(matrix)
    s = np.linalg.svd(a, compute_uv=False)
    return float(np.sqrt(np.sum(s[rank:] ** 2)))


def gram(matrix):
    """Gram matrix of the rows; symmetric by construction."""
    a = as_data_matrix(matrix)
    g = a @ a.T
    iu = np.triu_indices_from(g, k=1)
    g.T[iu] = g[iu]
    return g


def center_gram(g):
    """Double-center a Gram matrix (Gram of the mean-centred points)."""
    g = np.asarray(g, dtype=float)
    row = g.mean(axis=1, keepdims=True)
    col = g.mean(axis=0, keepdims=True)
    centred = g - row - col + g.mean()
    return 0.5 * (centred + centred.T)


def pairwise_sq_distance(g, i, j):
    """Squared distance between points ``i`` and ``j`` read off a Gram matrix."""
    n = g.shape[0]
    for idx in (i, j):
        if not 0 <= idx < n:
            raise IndexError(f"index {idx} out of range for Gram of order {n}")
    return float(g[i, i] + g[j, j] - g[i, j] - g[j, i])


def top_eigenvectors(g, count, center=False):
    """Leading eigenpairs of a symmetric matrix as an embedding.

    Returns ``(coords, eigenvalues)`` where ``coords`` is ``N x count`` and
    its Gram approximates ``g``. Slightly negative eigenvalues are clamped to
    zero; those below ``-EIG_CLAMP * lambda_max`` also log a warning.
    """
    g = np.asarray(g, dtype=float)
    if g.ndim != 2 or g.shape[0] != g.shape[1]:
        raise ValueError("expected a square matrix")
    if not 1 <= count <= g.shape[0]:
        raise ValueError(f"count must be in [1, {g.shape[0]}]")
    if center:
        g = center_gram(g)
    vals, vecs = np.linalg.eigh(0.5 * (g + g.T))
    lam_max = max(float(vals[-1]), 0.0)
    if lam_max > 0 and vals[0] < -EIG_CLAMP * lam_max:
        logger.warning("Gram matrix is not PSD (min eigenvalue %.3g); clamping", vals[0])
    order = np.argsort(vals, kind="stable")[::-1][:count]
    vals = np.clip(vals[order], 0.0, None)
    vecs = vecs[:, order]
    vecs, _ = _fix_signs(vecs.copy(), np.zeros((count, 1)))
    return vecs * np.sqrt(vals), vals
