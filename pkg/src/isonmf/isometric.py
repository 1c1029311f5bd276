"""Isometric NMF: non-negative factors whose coefficient rows embed the data isometrically.

The problem solved is

    max  sum_i |W_i - W_f(i)|^2
    s.t. |W_i - W_j|^2 = d_ij   for neighbor pairs (i, j)
         W H = V
         W >= 0, H >= 0

with both equality families handled by the augmented Lagrangian and the
sign constraints by the bounds of the inner L-BFGS-B solves.
"""

import logging
from dataclasses import dataclass, field

import numpy as np

from .linalg import as_data_matrix
from .mfnu import PairOperator, objective_weight
from .neighbors import DEFAULT_LEAF_CAPACITY, neighbor_graph
from .nmf import FactorPair, SNAP_ZERO, clipped_svd, pack, unpack
from .optimize import AugLagConfig, AugLagState, ConstraintFamily, augmented_lagrangian_solve

logger = logging.getLogger(__name__)


@dataclass
class IsoNmfConfig:
    k_nn: int = 3
    leaf_capacity: int = DEFAULT_LEAF_CAPACITY
    tol_iso: float = 1e-6
    # Relative to max |V|.
    tol_fact: float = 1e-4
    solver: AugLagConfig = field(default_factory=AugLagConfig)


class IsoNmfProblem:
    """Objective and constraint residuals of one isoNMF instance.

    Works in rescaled units: ``V`` and ``W`` are multiplied by
    ``1 / sqrt(scale)`` (``scale`` the mean neighbor squared distance), which
    leaves ``H`` unchanged and makes the isometry targets order one.
    """

    def __init__(self, v, k, graph):
        self.n, self.m = v.shape
        self.k = int(k)
        pairs, targets = graph.constraint_pairs()
        self.scale = float(np.mean(targets)) if targets.size and np.mean(targets) > 0 else 1.0
        self.root = np.sqrt(self.scale)
        self.v = v / self.root
        self.targets = targets / self.scale
        self.pairs = PairOperator(pairs, self.n)
        self.furthest = PairOperator(graph.furthest_pairs(), self.n)
        self.weight = objective_weight(len(self.pairs), graph.furthest_sq_dist / self.scale)

    def split(self, x):
        return unpack(x, self.n, self.m, self.k)

    def objective(self, x):
        """``-sum_i B_i . W W^T`` and its gradient (zero in the ``H`` block)."""
        w, _ = self.split(x)
        val = -self.weight * float(np.sum(self.furthest.sq_dists(w)))
        gw = self.furthest.weighted_grad(w, np.full(len(self.furthest), -self.weight))
        return val, np.concatenate([gw.ravel(), np.zeros(self.k * self.m)])

    def iso_residual(self, x):
        w, _ = self.split(x)
        return self.pairs.sq_dists(w) - self.targets

    def iso_vjp(self, x, weights):
        w, _ = self.split(x)
        gw = self.pairs.weighted_grad(w, weights)
        return np.concatenate([gw.ravel(), np.zeros(self.k * self.m)])

    def fact_residual(self, x):
        w, h = self.split(x)
        return (w @ h - self.v).ravel()

    def fact_vjp(self, x, weights):
        w, h = self.split(x)
        wm = weights.reshape(self.n, self.m)
        return pack(wm @ h.T, w.T @ wm)

    def families(self, tol_iso, tol_fact):
        fact_tol = tol_fact * max(float(np.max(np.abs(self.v))), np.finfo(float).tiny)
        return [
            ConstraintFamily("isometry", self.iso_residual, self.iso_vjp, tol_iso),
            ConstraintFamily("factorization", self.fact_residual, self.fact_vjp, fact_tol),
        ]

    def lagrangian(self, x, lam, mu, sigma1, sigma2):
        """Augmented Lagrangian with its two partial derivatives written out.

        ``L = -sum B.WW^T - sum lam (A.WW^T - d) - sum mu (WH - V)
              + sigma1/2 sum (A.WW^T - d)^2 + sigma2/2 sum (WH - V)^2``
        """
        w, h = self.split(x)
        c_iso = self.pairs.sq_dists(w) - self.targets
        resid = w @ h - self.v
        mu = mu.reshape(self.n, self.m)
        val = (
            -self.weight * float(np.sum(self.furthest.sq_dists(w)))
            - lam @ c_iso
            - float(np.sum(mu * resid))
            + 0.5 * sigma1 * (c_iso @ c_iso)
            + 0.5 * sigma2 * float(np.sum(resid * resid))
        )
        grad_w = (
            self.furthest.weighted_grad(w, np.full(len(self.furthest), -self.weight))
            + self.pairs.weighted_grad(w, sigma1 * c_iso - lam)
            - mu @ h.T
            + sigma2 * resid @ h.T
        )
        grad_h = -w.T @ mu + sigma2 * w.T @ resid
        return val, pack(grad_w, grad_h)


def isometric_init(v, k):
    """Clipped-SVD factors rebalanced so every nonzero row of ``H`` has unit norm.

    The diagonal rescaling keeps ``W H`` unchanged and puts the data scale in
    ``W``, where the isometry constraints act.
    """
    pair = clipped_svd(v, k)
    norms = np.linalg.norm(pair.h, axis=1)
    norms[norms == 0] = 1.0
    return FactorPair(pair.w * norms, pair.h / norms[:, None])


def isonmf_solve(v, k, config=None, graph=None, init=None, log=None):
    """Isometric NMF of ``v`` with inner rank ``k``.

    Returns ``(FactorPair, SolveReport, graph)``; ``W`` rows are the
    embedding. The neighbor graph is built on the rows of ``v`` unless given.
    """
    cfg = config or IsoNmfConfig()
    v = as_data_matrix(v, nonnegative=True, name="V")
    n = v.shape[0]
    k = int(k)
    if k < 1:
        raise ValueError("rank must be >= 1")
    if not 1 <= cfg.k_nn < n:
        raise ValueError(f"k_nn must be in [1, {n - 1}]")
    if graph is None:
        graph = neighbor_graph(v, cfg.k_nn, cfg.leaf_capacity)
    problem = IsoNmfProblem(v, k, graph)
    if init is None:
        init = isometric_init(v, min(k, min(v.shape))) if k <= min(v.shape) else None
        if init is None:
            raise ValueError("rank exceeds min(N, m); pass explicit initial factors")
    if init.w.shape != (n, k) or init.h.shape != (k, v.shape[1]):
        raise ValueError("initial factors do not match V and k")
    x0 = pack(init.w / problem.root, init.h)
    families = problem.families(cfg.tol_iso, cfg.tol_fact)
    state = AugLagState.zeros([len(problem.pairs), n * v.shape[1]], cfg.solver.sigma0)
    x, state, report = augmented_lagrangian_solve(
        problem.objective, families, x0, state, (0.0, np.inf), cfg.solver, log=log
    )
    x[x < SNAP_ZERO] = 0.0
    w, h = problem.split(x)
    # Back to data units: isometry residuals scale with d, factorization with V.
    units = (problem.scale, problem.root)
    report.objective *= problem.scale
    report.history = [[r * u for r, u in zip(row, units)] for row in report.history]
    report.max_violation = max(report.history[-1])
    return FactorPair(w * problem.root, h.copy()), report, graph
