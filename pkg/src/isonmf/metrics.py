"""Evaluation quantities for factorizations and embeddings."""

import logging
from dataclasses import asdict, dataclass, field

import numpy as np

from .neighbors import pair_sq_dists

logger = logging.getLogger(__name__)

SPARSITY_THRESHOLD = 1e-6
DISTANCE_ERROR_DEFINITION = "relative-rms-squared-knn-distance"


def reconstruction_error(v, pair):
    """Relative Frobenius error ``|V - WH| / |V|``."""
    v = np.asarray(v, dtype=float)
    prod = pair.w @ pair.h
    if prod.shape != v.shape:
        raise ValueError(f"factor product has shape {prod.shape}, data has {v.shape}")
    norm = np.linalg.norm(v)
    if norm == 0:
        raise ValueError("reconstruction error is undefined for an all-zero matrix")
    return float(np.linalg.norm(v - prod) / norm)


def sparsity(pair):
    """Fraction of entries of ``W`` and ``H`` that are zero up to ``1e-6 * max|entry|``."""
    entries = np.abs(np.concatenate([pair.w.ravel(), pair.h.ravel()]))
    peak = entries.max(initial=0.0)
    if peak == 0:
        return 1.0
    return float(np.mean(entries <= SPARSITY_THRESHOLD * peak))


def distance_error(w, graph):
    """Relative RMS error of squared embedding distances over the k-NN pairs.

    ``sqrt(sum (|w_i - w_j|^2 - d_ij)^2 / sum d_ij^2)`` with ``d_ij`` the
    squared data distances stored in ``graph``.
    """
    pairs, targets = graph.constraint_pairs()
    if pairs.shape[0] == 0:
        raise ValueError("neighbor graph has no pairs")
    w = np.asarray(w, dtype=float)
    if w.shape[0] != graph.n_points:
        raise ValueError("embedding and graph disagree on the number of points")
    emb = pair_sq_dists(w, pairs)
    denom = float(np.sum(targets**2))
    if denom == 0:
        raise ValueError("all neighbor distances are zero")
    return float(np.sqrt(np.sum((emb - targets) ** 2) / denom))


def spectrum(pair):
    """Per-component energy ``sum_l W_li^2 / sqrt(sum_l H_il^2)``.

    Components with an all-zero ``H`` row get ``inf`` and a warning.
    """
    num = np.sum(pair.w**2, axis=0)
    den = np.sqrt(np.sum(pair.h**2, axis=1))
    out = np.full(num.shape, np.inf)
    ok = den > 0
    out[ok] = num[ok] / den[ok]
    if not np.all(ok):
        logger.warning("components %s have all-zero prototypes", np.flatnonzero(~ok).tolist())
    return out


@dataclass
class EvalReport:
    rec_error: float | None
    sparsity: float | None
    dist_error: float | None
    spectrum: list = field(default_factory=list)
    dist_error_definition: str = DISTANCE_ERROR_DEFINITION

    @property
    def sorted_spectrum(self):
        return sorted(self.spectrum, reverse=True)

    def to_dict(self):
        out = asdict(self)
        out["spectrum_sorted"] = self.sorted_spectrum
        return out


def evaluate(v, pair, graph=None):
    """All metrics for a factorization; distance error only when ``graph`` is given."""
    return EvalReport(
        rec_error=reconstruction_error(v, pair),
        sparsity=sparsity(pair),
        dist_error=distance_error(pair.w, graph) if graph is not None else None,
        spectrum=[float(s) for s in spectrum(pair)],
    )
