"""Bound-constrained quasi-Newton inner solver and augmented-Lagrangian outer loop.

The inner solver wraps scipy's L-BFGS-B. The outer loop handles any number
of equality-constraint families, each with its own multipliers and penalty
weight, which is what MFNU (one family) and isoNMF (two families) need.
"""

import logging
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.optimize import Bounds, minimize

logger = logging.getLogger(__name__)

CONVERGED = "converged"
ITERATION_CAP = "iteration cap"
STALLED = "stalled"


@dataclass
class LbfgsbConfig:
    memory: int = 10
    tol_grad: float = 1e-5
    max_iter: int = 15000
    # Relative objective-reduction stop passed to L-BFGS-B; 0 disables it.
    # A stop on this rule counts as converged.
    ftol: float = 1e-15


@dataclass
class SolveReport:
    objective: float
    grad_norm: float
    outer_iterations: int
    inner_iterations: int
    max_violation: float
    reason: str
    message: str = ""
    history: list = field(default_factory=list)

    def to_dict(self):
        return {
            "objective": self.objective,
            "grad_norm": self.grad_norm,
            "outer_iterations": self.outer_iterations,
            "inner_iterations": self.inner_iterations,
            "max_violation": self.max_violation,
            "reason": self.reason,
            "message": self.message,
        }


def make_bounds(n, lower=-np.inf, upper=np.inf):
    """Broadcast scalar or per-coordinate bounds to two length-``n`` arrays."""
    lo = np.broadcast_to(np.asarray(lower, dtype=float), (n,)).copy()
    hi = np.broadcast_to(np.asarray(upper, dtype=float), (n,)).copy()
    if np.any(lo > hi):
        raise ValueError("lower bound exceeds upper bound")
    return lo, hi


def projected_gradient(x, g, lo, hi):
    """Gradient with components that would push ``x`` out of its box removed."""
    pg = g.copy()
    pg[(x <= lo) & (g > 0)] = 0.0
    pg[(x >= hi) & (g < 0)] = 0.0
    return pg


def lbfgsb_minimize(fun, x0, bounds=None, config=None):
    """Minimize ``fun`` (returning value and gradient) inside a box.

    ``bounds`` is a ``(lower, upper)`` pair of arrays or scalars, or None.
    Returns ``(x, SolveReport)``; ``x`` is always inside the box.
    """
    cfg = config or LbfgsbConfig()
    if cfg.memory < 1 or cfg.tol_grad <= 0 or cfg.max_iter < 1:
        raise ValueError("invalid L-BFGS-B configuration")
    x0 = np.asarray(x0, dtype=float).ravel()
    lo, hi = make_bounds(x0.size, *(bounds if bounds is not None else ()))
    x0 = np.clip(x0, lo, hi)
    f0, g0 = fun(x0)
    g0 = np.asarray(g0, dtype=float)
    if g0.shape != x0.shape:
        raise ValueError(f"gradient has shape {g0.shape}, expected {x0.shape}")
    if not (np.isfinite(f0) and np.all(np.isfinite(g0))):
        raise ValueError("objective or gradient is not finite at the starting point")

    history = [float(f0)]

    def wrapped(x):
        f, g = fun(x)
        if not np.isfinite(f) or not np.all(np.isfinite(g)):
            # Infinite value makes the line search back off.
            return np.inf, np.zeros_like(x)
        return float(f), np.asarray(g, dtype=float)

    def callback(intermediate_result):
        history.append(float(intermediate_result.fun))

    res = minimize(
        wrapped,
        x0,
        jac=True,
        method="L-BFGS-B",
        bounds=Bounds(lo, hi),
        callback=callback,
        options={
            "maxcor": cfg.memory,
            "gtol": cfg.tol_grad,
            "ftol": cfg.ftol,
            "maxiter": cfg.max_iter,
            "maxfun": 20 * cfg.max_iter,
        },
    )
    x = np.clip(res.x, lo, hi)
    f, g = fun(x)
    pg = float(np.max(np.abs(projected_gradient(x, np.asarray(g), lo, hi)), initial=0.0))
    if not np.isfinite(f):
        reason = STALLED
    elif pg <= cfg.tol_grad or (cfg.ftol > 0 and "REDUCTION OF F" in str(res.message).upper()):
        reason = CONVERGED
    elif res.nit >= cfg.max_iter or "LIMIT" in str(res.message).upper():
        reason = ITERATION_CAP
    else:
        reason = STALLED
    report = SolveReport(
        objective=float(f),
        grad_norm=pg,
        outer_iterations=0,
        inner_iterations=int(res.nit),
        max_violation=0.0,
        reason=reason,
        message=str(res.message),
        history=history,
    )
    return x, report


@dataclass
class ConstraintFamily:
    """A block of equality constraints ``c(x) = 0``.

    ``residual(x)`` returns the vector ``c(x)``; ``vjp(x, w)`` returns
    ``J(x)^T w``. ``tol`` is the feasibility tolerance on ``max |c|``.
    """

    name: str
    residual: Callable[[np.ndarray], np.ndarray]
    vjp: Callable[[np.ndarray, np.ndarray], np.ndarray]
    tol: float = 1e-6


@dataclass
class AugLagConfig:
    max_outer: int = 50
    max_inner: int = 2000
    memory: int = 10
    sigma0: float = 1.0
    rho: float = 10.0
    theta: float = 0.25
    sigma_max: float = 1e12
    # Gradient tolerances are relative to max(1, |grad f|_inf).
    tol_grad: float = 1e-8
    tol_grad_initial: float = 1e-5
    ftol: float = 0.0
    # A family makes progress when its worst residual drops by this fraction.
    progress: float = 1e-3
    # Consecutive outer iterations without progress before reporting a stall.
    stall_patience: int = 5


@dataclass
class AugLagState:
    """Multipliers and penalty weights, one entry per constraint family."""

    multipliers: list
    penalties: list
    residual_history: list = field(default_factory=list)

    @classmethod
    def zeros(cls, sizes, sigma0=1.0):
        return cls([np.zeros(n) for n in sizes], [float(sigma0)] * len(sizes))


def augmented_lagrangian(objective, families, state):
    """Build ``x -> (L(x), grad L(x))`` for the current multipliers and penalties.

    ``L = f - sum(lambda . c) + sigma/2 * |c|^2`` summed over families.
    """

    def lagrangian(x):
        f, g = objective(x)
        g = np.array(g, dtype=float)
        for fam, lam, sigma in zip(families, state.multipliers, state.penalties):
            c = fam.residual(x)
            f = f - lam @ c + 0.5 * sigma * (c @ c)
            g += fam.vjp(x, sigma * c - lam)
        return f, g

    return lagrangian


def augmented_lagrangian_solve(
    objective, families, x0, state=None, bounds=None, config=None, gauge=None, log=None
):
    """Minimize ``objective`` subject to every family's ``c(x) = 0`` inside a box.

    Each outer iteration runs L-BFGS-B on the augmented Lagrangian, then
    updates ``lambda <- lambda - sigma * c`` and multiplies ``sigma`` by
    ``rho`` for any family whose worst residual did not shrink by ``theta``.
    ``gauge``, if given, maps ``x`` to an equivalent point after every inner
    solve (for symmetries the objective and constraints share).

    The report's ``grad_norm`` is the projected gradient of the last inner
    problem divided by ``max(1, |grad f|_inf)``, the scale that the
    ``tol_grad`` settings refer to. Returns ``(x, state, SolveReport)``.
    """
    cfg = config or AugLagConfig()
    x = np.asarray(x0, dtype=float).ravel().copy()
    if bounds is not None:
        lo, hi = make_bounds(x.size, *bounds)
        x = np.clip(x, lo, hi)
    if state is None:
        state = AugLagState.zeros([fam.residual(x).size for fam in families], cfg.sigma0)
    if any(s <= 0 for s in state.penalties):
        raise ValueError("penalty weights must be positive")
    log = log or logger.debug

    def violations(x):
        return [float(np.max(np.abs(fam.residual(x)), initial=0.0)) for fam in families]

    def grad_scale(x):
        _, g = objective(x)
        return max(1.0, float(np.max(np.abs(g), initial=0.0)))

    viol = violations(x)
    state.residual_history.append(viol)
    inner_total = 0
    no_progress = 0
    reason = ITERATION_CAP
    report = None
    pg = np.inf
    gscale = grad_scale(x)
    outer = 0
    for outer in range(1, cfg.max_outer + 1):
        worst_ratio = max(v / fam.tol for v, fam in zip(viol, families)) if families else 0.0
        gtol = float(np.clip(0.1 * worst_ratio * cfg.tol_grad_initial, cfg.tol_grad, cfg.tol_grad_initial))
        inner_cfg = LbfgsbConfig(cfg.memory, gtol * gscale, cfg.max_inner, cfg.ftol)
        lagr = augmented_lagrangian(objective, families, state)
        x, report = lbfgsb_minimize(lagr, x, bounds, inner_cfg)
        if gauge is not None:
            x = gauge(x)
        inner_total += report.inner_iterations
        gscale = grad_scale(x)
        pg = report.grad_norm / gscale
        new_viol = violations(x)
        state.residual_history.append(new_viol)
        log(
            f"outer {outer}: L={report.objective:.10g} pg={pg:.3g} "
            f"inner={report.inner_iterations} ({report.reason}) "
            + " ".join(f"{fam.name}={v:.3g}" for fam, v in zip(families, new_viol))
            + " sigma=" + ",".join(f"{s:.3g}" for s in state.penalties)
        )
        # First-order multiplier estimate, also kept on the final iteration.
        for idx, fam in enumerate(families):
            state.multipliers[idx] = state.multipliers[idx] - state.penalties[idx] * fam.residual(x)
        feasible = all(v <= fam.tol for v, fam in zip(new_viol, families))
        # A line search that cannot decrease L any further at a feasible
        # point with a small gradient has hit the rounding floor.
        at_floor = report.reason == STALLED and pg <= cfg.tol_grad_initial
        if feasible and (pg <= cfg.tol_grad or at_floor):
            viol = new_viol
            reason = CONVERGED
            break
        # Residuals that neither shrink nor meet tolerance count towards a stall.
        stuck = [nv > fam.tol and nv >= (1.0 - cfg.progress) * v
                 for nv, v, fam in zip(new_viol, viol, families)]
        no_progress = no_progress + 1 if any(stuck) and not feasible else 0
        for idx, fam in enumerate(families):
            if new_viol[idx] > fam.tol and new_viol[idx] > cfg.theta * viol[idx]:
                state.penalties[idx] = min(state.penalties[idx] * cfg.rho, cfg.sigma_max)
        viol = new_viol
        if no_progress >= cfg.stall_patience:
            reason = STALLED
            break

    summary = SolveReport(
        objective=float(objective(x)[0]),
        grad_norm=float(pg),
        outer_iterations=outer,
        inner_iterations=inner_total,
        max_violation=max(viol, default=0.0),
        reason=reason,
        message=report.message if report else "",
        history=[list(v) for v in state.residual_history],
    )
    return x, state, summary
