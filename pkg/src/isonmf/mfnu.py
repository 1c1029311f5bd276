"""Maximum Furthest Neighbor Unfolding in its low-rank (``K = R R^T``) form.

The embedding ``R`` maximizes the summed squared distance of every point to
its furthest neighbor while keeping the squared distances to its k nearest
neighbors fixed. Both the objective selectors and the constraint selectors
are evaluated pairwise from rows of ``R``; the ``N x N`` selector matrices
are never formed.
"""

import logging
from dataclasses import dataclass, field

import numpy as np
from scipy import sparse

from .linalg import as_data_matrix, gram, top_eigenvectors
from .neighbors import DEFAULT_LEAF_CAPACITY, neighbor_graph
from .optimize import AugLagConfig, AugLagState, ConstraintFamily, augmented_lagrangian_solve

logger = logging.getLogger(__name__)


class PairOperator:
    """Squared row distances ``|R_a - R_b|^2`` for a fixed list of pairs.

    For a pair ``(a, b)`` this equals ``A_ab . R R^T`` where ``A_ab`` is the
    selector with ``+1`` at ``(a, a)`` and ``(b, b)`` and ``-1`` at ``(a, b)``
    and ``(b, a)``.
    """

    def __init__(self, pairs, n):
        pairs = np.asarray(pairs, dtype=np.int64).reshape(-1, 2)
        self.pairs = pairs
        self.n = n
        p = pairs.shape[0]
        rows = np.repeat(np.arange(p), 2)
        cols = pairs.ravel()
        vals = np.tile([1.0, -1.0], p)
        self.incidence = sparse.csr_matrix((vals, (rows, cols)), shape=(p, n))
        self.incidence_t = self.incidence.T.tocsr()

    def __len__(self):
        return self.pairs.shape[0]

    def differences(self, r):
        return self.incidence @ r

    def sq_dists(self, r):
        diff = self.differences(r)
        return np.einsum("ij,ij->i", diff, diff)

    def weighted_grad(self, r, weights):
        """Gradient of ``sum_p weights[p] * |R_a - R_b|^2`` with respect to ``R``."""
        diff = self.differences(r)
        return 2.0 * (self.incidence_t @ (weights[:, None] * diff))

    def selector(self, idx):
        """Explicit ``N x N`` selector matrix of pair ``idx`` (small N only)."""
        a, b = self.pairs[idx]
        sel = np.zeros((self.n, self.n))
        sel[a, a] += 1.0
        sel[b, b] += 1.0
        sel[a, b] -= 1.0
        sel[b, a] -= 1.0
        return sel


@dataclass
class MfnuConfig:
    dim: int = 2
    k: int = 3
    leaf_capacity: int = DEFAULT_LEAF_CAPACITY
    seed: int = 0
    center: bool = True
    tol_feas: float = 1e-6
    solver: AugLagConfig = field(default_factory=AugLagConfig)


@dataclass
class MfnuProblem:
    """Pairs, targets and scale of one MFNU instance.

    Targets are stored divided by ``scale`` (the mean target squared
    distance) so that the solver works with unit-size constraints.
    """

    n: int
    dim: int
    constraints: PairOperator
    targets: np.ndarray
    furthest: PairOperator
    scale: float

    def objective(self, x):
        """Negated furthest-neighbor spread, ``-sum_i B_i . R R^T``."""
        r = x.reshape(self.n, self.dim)
        val = -float(np.sum(self.furthest.sq_dists(r)))
        grad = self.furthest.weighted_grad(r, -np.ones(len(self.furthest)))
        return val, grad.ravel()

    def residual(self, x):
        r = x.reshape(self.n, self.dim)
        return self.constraints.sq_dists(r) - self.targets

    def vjp(self, x, w):
        r = x.reshape(self.n, self.dim)
        return self.constraints.weighted_grad(r, w).ravel()

    def lagrangian(self, x, multipliers, sigma):
        """Augmented Lagrangian value and gradient, written out term by term.

        ``L = -sum B.RR^T - sum lam (A.RR^T - d) + sigma/2 sum (A.RR^T - d)^2``
        """
        r = x.reshape(self.n, self.dim)
        c = self.residual(x)
        f, g = self.objective(x)
        val = f - multipliers @ c + 0.5 * sigma * (c @ c)
        grad = g.reshape(r.shape) + self.constraints.weighted_grad(r, sigma * c - multipliers)
        return val, grad.ravel()


def objective_weight(n_constraints, furthest_sq):
    """Positive factor putting the spread objective on the scale of the penalties.

    The spread term grows like ``N * diameter^2`` while the penalty of unit
    residuals grows like the number of constraints; rescaling the objective
    leaves the constrained optimum unchanged.
    """
    total = float(np.sum(furthest_sq))
    return n_constraints / total if total > 0 else 1.0


def build_problem(v, dim, graph):
    n = v.shape[0]
    pairs, targets = graph.constraint_pairs()
    scale = float(np.mean(targets)) if targets.size else 1.0
    if scale <= 0:
        scale = 1.0
    return MfnuProblem(
        n=n,
        dim=dim,
        constraints=PairOperator(pairs, n),
        targets=targets / scale,
        furthest=PairOperator(graph.furthest_pairs(), n),
        scale=scale,
    )


def initial_embedding(v, dim, seed=0):
    """Classical MDS coordinates of the centred Gram, or seeded noise if degenerate."""
    coords, vals = top_eigenvectors(gram(v), dim, center=True)
    if vals[-1] > 1e-12 * max(vals[0], 1e-300):
        return coords
    rng = np.random.default_rng(seed)
    norm = np.sqrt(np.mean(np.sum((v - v.mean(axis=0)) ** 2, axis=1))) or 1.0
    noise = rng.standard_normal((v.shape[0], dim)) * norm / np.sqrt(dim)
    out = coords.copy()
    weak = vals <= 1e-12 * max(vals[0], 1e-300)
    out[:, weak] = noise[:, weak]
    return out


def mfnu_solve(v, config=None, graph=None, init=None, log=None):
    """Unfold the rows of ``v`` into ``config.dim`` dimensions.

    Returns ``(R, SolveReport, graph)`` with ``R`` of shape ``N x dim`` in
    the units of ``v``. A precomputed ``graph`` (with furthest neighbors) can
    be passed to skip the neighbor search.
    """
    cfg = config or MfnuConfig()
    v = as_data_matrix(v, name="data")
    n = v.shape[0]
    if cfg.dim < 1:
        raise ValueError("target dimension must be >= 1")
    if not 1 <= cfg.k < n:
        raise ValueError(f"k must be in [1, {n - 1}]")
    if graph is None:
        graph = neighbor_graph(v, cfg.k, cfg.leaf_capacity)
    problem = build_problem(v, cfg.dim, graph)
    root = np.sqrt(problem.scale)
    r0 = initial_embedding(v, cfg.dim, cfg.seed) if init is None else np.asarray(init, dtype=float)
    if r0.shape != (n, cfg.dim):
        raise ValueError(f"initial embedding must have shape {(n, cfg.dim)}")

    family = ConstraintFamily("isometry", problem.residual, problem.vjp, cfg.tol_feas)

    def centre(x):
        r = x.reshape(n, cfg.dim)
        return (r - r.mean(axis=0)).ravel() if cfg.center else x

    x0 = centre((r0 / root).ravel())
    state = AugLagState.zeros([len(problem.constraints)], cfg.solver.sigma0)
    x, state, report = augmented_lagrangian_solve(
        problem.objective, [family], x0, state, None, cfg.solver, gauge=centre, log=log
    )
    r = x.reshape(n, cfg.dim) * root
    # Report the objective and violations in data units.
    report.objective *= problem.scale
    report.max_violation *= problem.scale
    report.history = [[h * problem.scale for h in row] for row in report.history]
    return r, report, graph


def furthest_objective(r, graph):
    """``sum_i |R_i - R_f(i)|^2`` over the furthest pairs of ``graph``."""
    r = np.asarray(r, dtype=float)
    op = PairOperator(graph.furthest_pairs(), r.shape[0])
    return float(np.sum(op.sq_dists(r)))


def constraint_residuals(r, graph):
    """``|R_i - R_j|^2 - d_ij`` over the symmetrized neighbor pairs of ``graph``."""
    pairs, targets = graph.constraint_pairs()
    return PairOperator(pairs, r.shape[0]).sq_dists(np.asarray(r, dtype=float)) - targets


def unfold_spectrum(r):
    """Eigenvalues of ``R R^T`` (squared singular values of ``R``), non-increasing."""
    r = np.atleast_2d(np.asarray(r, dtype=float))
    s = np.linalg.svd(r, compute_uv=False)
    return np.sort(s * s)[::-1]
