"""Classic L2 NMF, the clipped-SVD baseline and the exact constructive NMF."""

import logging
import warnings
from dataclasses import dataclass

import numpy as np

from .linalg import as_data_matrix, svd
from .optimize import LbfgsbConfig, lbfgsb_minimize

logger = logging.getLogger(__name__)

# Factor entries below this are set to exactly zero after a solve.
SNAP_ZERO = 1e-12


@dataclass
class FactorPair:
    """Non-negative factors with ``W @ H`` approximating the data."""

    w: np.ndarray
    h: np.ndarray

    def __post_init__(self):
        self.w = np.asarray(self.w, dtype=float)
        self.h = np.asarray(self.h, dtype=float)
        if self.w.ndim != 2 or self.h.ndim != 2 or self.w.shape[1] != self.h.shape[0]:
            raise ValueError(f"factor shapes do not compose: {self.w.shape} x {self.h.shape}")

    @property
    def k(self):
        return self.w.shape[1]

    def product(self):
        return self.w @ self.h

    def is_nonnegative(self):
        return bool(np.all(self.w >= 0) and np.all(self.h >= 0))


@dataclass
class NmfConfig:
    restarts: int = 1
    seed: int = 0
    solver: LbfgsbConfig = None

    def __post_init__(self):
        if self.solver is None:
            self.solver = LbfgsbConfig(tol_grad=1e-8, max_iter=5000)
        if self.restarts < 1:
            raise ValueError("restarts must be >= 1")


def pack(w, h):
    return np.concatenate([w.ravel(), h.ravel()])


def unpack(x, n, m, k):
    return x[: n * k].reshape(n, k), x[n * k:].reshape(k, m)


def nmf_objective(v, k):
    """``x -> (|V - WH|_F^2, gradient)`` over the packed vector ``[W.ravel(), H.ravel()]``."""
    n, m = v.shape

    def fun(x):
        w, h = unpack(x, n, m, k)
        resid = w @ h - v
        gw = 2.0 * resid @ h.T
        gh = 2.0 * w.T @ resid
        return float(np.sum(resid * resid)), pack(gw, gh)

    return fun


def random_init(v, k, rng):
    """Uniform [0, 1] factors scaled by sqrt(mean(V) / k)."""
    n, m = v.shape
    scale = np.sqrt(max(v.mean(), np.finfo(float).tiny) / k)
    w = rng.uniform(0.0, 1.0, size=(n, k)) * scale
    h = rng.uniform(0.0, 1.0, size=(k, m)) * scale
    return FactorPair(w, h)


def _solve_once(v, k, init, solver):
    n, m = v.shape
    x, report = lbfgsb_minimize(nmf_objective(v, k), pack(init.w, init.h), (0.0, np.inf), solver)
    x[x < SNAP_ZERO] = 0.0
    w, h = unpack(x, n, m, k)
    return FactorPair(w.copy(), h.copy()), report


def nmf_solve(v, k, init=None, config=None):
    """Locally minimize ``|V - WH|_F^2`` over ``W, H >= 0``.

    ``init`` is a :class:`FactorPair` or None for seeded random starts. With
    several restarts the lowest final objective wins, ties going to the
    earliest restart. Returns ``(FactorPair, SolveReport)``.
    """
    cfg = config or NmfConfig()
    v = as_data_matrix(v, nonnegative=True, name="V")
    k = int(k)
    if k < 1:
        raise ValueError("rank must be >= 1")
    if k > min(v.shape):
        warnings.warn(f"rank {k} exceeds min(N, m) = {min(v.shape)}; factorization is overcomplete")
    if init is not None:
        if init.w.shape != (v.shape[0], k) or init.h.shape != (k, v.shape[1]):
            raise ValueError("initial factors do not match V and k")
        if not init.is_nonnegative():
            raise ValueError("initial factors must be non-negative")
        return _solve_once(v, k, init, cfg.solver)

    best = None
    for restart in range(cfg.restarts):
        rng = np.random.default_rng([cfg.seed, restart])
        pair, report = _solve_once(v, k, random_init(v, k, rng), cfg.solver)
        logger.debug("restart %d: objective %.6g (%s)", restart, report.objective, report.reason)
        if best is None or report.objective < best[1].objective:
            best = (pair, report)
    return best


def clipped_svd(v, k):
    """Rank-``k`` SVD with ``sqrt(s)`` folded into both factors, then clipped at zero."""
    res = svd(v, k)
    root = np.sqrt(res.s)
    w = np.clip(res.u * root, 0.0, None)
    h = np.clip(root[:, None] * res.vt, 0.0, None)
    return FactorPair(w, h)


def diagonally_dominant_cp_factor(a, drop_zero=True):
    """Non-negative ``B`` with ``B @ B.T == a`` for a diagonally dominant ``a``.

    ``a`` must be symmetric, entrywise non-negative and satisfy
    ``a[i, i] >= sum_{j != i} a[i, j]``. Each positive off-diagonal pair
    ``(i, j)``, ``i < j``, contributes a column with ``sqrt(a[i, j])`` in rows
    ``i`` and ``j``; each row's diagonal surplus contributes a column with its
    square root in row ``i``. Zero-surplus columns are dropped unless
    ``drop_zero`` is False.
    """
    a = np.asarray(a, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError("expected a square matrix")
    if not np.array_equal(a, a.T):
        raise ValueError("matrix is not symmetric")
    if np.any(a < 0):
        raise ValueError("matrix has negative entries")
    n = a.shape[0]
    off = a - np.diag(np.diag(a))
    surplus = np.diag(a) - off.sum(axis=1)
    # Surpluses within summation rounding of zero count as zero.
    slack = 1e-12 * np.maximum(np.diag(a), np.finfo(float).tiny)
    if np.any(surplus < -slack):
        raise ValueError("matrix is not diagonally dominant")
    surplus[np.abs(surplus) <= slack] = 0.0
    rows, cols = np.nonzero(np.triu(off, k=1))
    root = np.sqrt(a[rows, cols])
    pair_cols = np.zeros((n, rows.size))
    pair_cols[rows, np.arange(rows.size)] = root
    pair_cols[cols, np.arange(rows.size)] = root
    diag_rows = np.flatnonzero(surplus > 0) if drop_zero else np.arange(n)
    diag_cols = np.zeros((n, diag_rows.size))
    diag_cols[diag_rows, np.arange(diag_rows.size)] = np.sqrt(np.clip(surplus[diag_rows], 0.0, None))
    return np.hstack([pair_cols, diag_cols])


def augmented_data_matrix(v):
    """``[[D, V], [V^T, E]]`` with ``D``, ``E`` the row and column sums of ``V``."""
    n, m = v.shape
    z = np.zeros((n + m, n + m))
    z[:n, :n] = np.diag(v.sum(axis=1))
    z[n:, n:] = np.diag(v.sum(axis=0))
    z[:n, n:] = v
    z[n:, :n] = v.T
    return z


def exact_nmf_construction(v):
    """Exact non-negative factorization ``V = WH`` with inner rank ``nnz(V)``.

    The augmented matrix ``[[D, V], [V^T, E]]`` is diagonally dominant, so it
    has a non-negative factor ``B`` with ``B B^T`` equal to it; ``W`` is the
    top ``N`` rows of ``B`` and ``H`` the transpose of the rest. Choosing
    ``D`` and ``E`` as exact row and column sums leaves no diagonal surplus,
    so ``B`` has exactly one column per nonzero of ``V``.
    """
    v = as_data_matrix(v, nonnegative=True, name="V")
    n = v.shape[0]
    b = diagonally_dominant_cp_factor(augmented_data_matrix(v))
    return FactorPair(b[:n].copy(), b[n:].T.copy())


def cp_rank_bound(n):
    """Upper bound ``n(n+1)/2 - 1`` on the cp-rank of an ``n x n`` CP matrix."""
    return n * (n + 1) // 2 - 1


def cp_rank_bound_check(n, k):
    """True iff a CP factor of width ``k`` respects the cp-rank bound for order ``n``."""
    if n < 1:
        raise ValueError("n must be >= 1")
    return k <= cp_rank_bound(n)
