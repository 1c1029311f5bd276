import numpy as np
import pytest

from conftest import fd_gradient, relative_gap
from isonmf.datasets import ray_points
from isonmf.isometric import IsoNmfConfig, IsoNmfProblem, isometric_init, isonmf_solve
from isonmf.metrics import distance_error, reconstruction_error
from isonmf.mfnu import MfnuConfig, furthest_objective, mfnu_solve
from isonmf.neighbors import neighbor_graph
from isonmf.nmf import FactorPair, NmfConfig, nmf_solve, pack
from isonmf.optimize import (
    AugLagConfig,
    AugLagState,
    ConstraintFamily,
    LbfgsbConfig,
    augmented_lagrangian,
    augmented_lagrangian_solve,
    lbfgsb_minimize,
)


def random_problem(rng, n=None, m=None, k=None, k_nn=2):
    n = n or int(rng.integers(5, 21))
    m = m or int(rng.integers(2, 11))
    k = k or int(rng.integers(1, 5))
    v = rng.random((n, m))
    return v, IsoNmfProblem(v, k, neighbor_graph(v, k_nn))


def random_multipliers(rng, prob):
    return rng.standard_normal(len(prob.pairs)), rng.standard_normal(prob.n * prob.m)


def test_lagrangian_gradient_both_blocks(rng):
    for _ in range(20):
        v, prob = random_problem(rng)
        lam, mu = random_multipliers(rng, prob)
        s1, s2 = rng.uniform(0.5, 20, size=2)
        fun = lambda x: prob.lagrangian(x, lam, mu, s1, s2)
        x = rng.random(prob.n * prob.k + prob.k * prob.m)
        split = prob.n * prob.k
        grad, fd = fun(x)[1], fd_gradient(fun, x)
        assert relative_gap(grad[:split], fd[:split]) <= 1e-5
        assert relative_gap(grad[split:], fd[split:]) <= 1e-5


def test_explicit_lagrangian_equals_generic_assembly(rng):
    v, prob = random_problem(rng, n=12, m=6, k=3)
    lam, mu = random_multipliers(rng, prob)
    state = AugLagState([lam, mu], [3.0, 11.0])
    generic = augmented_lagrangian(prob.objective, prob.families(1e-6, 1e-4), state)
    x = rng.random(prob.n * prob.k + prob.k * prob.m)
    a, b = prob.lagrangian(x, lam, mu, 3.0, 11.0), generic(x)
    assert a[0] == pytest.approx(b[0], rel=1e-12)
    np.testing.assert_allclose(a[1], b[1], rtol=1e-10, atol=1e-12)


def test_isometric_init_keeps_product_and_normalizes_h(rng):
    v = rng.random((9, 5))
    init = isometric_init(v, 3)
    from isonmf.nmf import clipped_svd

    np.testing.assert_allclose(init.product(), clipped_svd(v, 3).product(), atol=1e-12)
    norms = np.linalg.norm(init.h, axis=1)
    assert np.all((np.abs(norms - 1) < 1e-12) | (norms == 0))


def test_ray_is_recovered():
    u = np.array([0.3, 0.5, 0.2, 0.7])
    v = ray_points(u, 5)
    pair, report, graph = isonmf_solve(v, 1, IsoNmfConfig(k_nn=2))
    assert report.reason == "converged"
    assert distance_error(pair.w, graph) <= 1e-4
    assert reconstruction_error(v, pair) <= 1e-4
    np.testing.assert_allclose(np.diff(pair.w[:, 0]), np.linalg.norm(u), rtol=1e-4)


def test_identity_pair():
    pair, report, graph = isonmf_solve(np.eye(2), 2, IsoNmfConfig(k_nn=1))
    assert reconstruction_error(np.eye(2), pair) <= 1e-6
    assert np.linalg.norm(pair.w[0] - pair.w[1]) == pytest.approx(np.sqrt(2), abs=1e-6)


def test_factors_exactly_nonnegative_and_report_in_data_units(rng):
    v = rng.random((20, 6)) * 50.0
    pair, report, graph = isonmf_solve(v, 3, IsoNmfConfig(solver=AugLagConfig(max_outer=4)))
    assert pair.is_nonnegative()
    assert len(report.history[0]) == 2
    iso = np.abs(np.sum((pair.w[graph.constraint_pairs()[0][:, 0]]
                         - pair.w[graph.constraint_pairs()[0][:, 1]]) ** 2, axis=1)
                 - graph.constraint_pairs()[1]).max()
    fact = np.abs(pair.product() - v).max()
    # Snapping tiny entries to zero after the solve moves the residuals by
    # a negligible amount.
    assert report.history[-1][0] == pytest.approx(iso, rel=1e-6, abs=1e-9)
    assert report.history[-1][1] == pytest.approx(fact, rel=1e-6, abs=1e-9)


def test_without_isometry_matches_nmf(rng):
    # lambda = sigma1 = 0, mu = 0, no spread term: L = sigma2/2 |WH - V|^2.
    v = rng.random((8, 5))
    k = 2
    prob = IsoNmfProblem(v, k, neighbor_graph(v, 2))
    prob.weight = 0.0
    init = FactorPair(rng.random((8, k)), rng.random((k, 5)))
    lam, mu = np.zeros(len(prob.pairs)), np.zeros(v.size)
    solver = LbfgsbConfig(tol_grad=1e-10, max_iter=5000)
    x, _ = lbfgsb_minimize(lambda z: prob.lagrangian(z, lam, mu, 0.0, 2.0),
                           pack(init.w / prob.root, init.h), (0.0, np.inf), solver)
    iso_obj = prob.lagrangian(x, lam, mu, 0.0, 2.0)[0] * prob.scale
    _, nmf_report = nmf_solve(v, k, init=init, config=NmfConfig(solver=solver))
    assert iso_obj == pytest.approx(nmf_report.objective, rel=1e-6)


def test_without_factorization_reduces_to_mfnu():
    # mu = sigma2 = 0 and no bounds: the W block alone is an MFNU problem.
    v = ray_points([0.6, 0.8], 5)
    graph = neighbor_graph(v, 2)
    prob = IsoNmfProblem(v, 1, graph)
    nw = prob.n * prob.k
    h = np.ones((1, v.shape[1]))

    def full(w_flat):
        return np.concatenate([w_flat, h.ravel()])

    def objective(w_flat):
        f, g = prob.objective(full(w_flat))
        return f, g[:nw]

    family = ConstraintFamily("isometry", lambda w: prob.iso_residual(full(w)),
                              lambda w, c: prob.iso_vjp(full(w), c)[:nw], 1e-8)
    w0 = np.linspace(0.0, 1.0, 5)
    w, _, report = augmented_lagrangian_solve(objective, [family], w0)
    assert report.reason == "converged"
    r, mf_report, _ = mfnu_solve(v, MfnuConfig(dim=1, k=2), graph=graph)
    w_data = w.reshape(-1, 1) * prob.root
    assert furthest_objective(w_data, graph) == pytest.approx(-mf_report.objective, rel=1e-6)
    gaps = lambda e: np.abs(e[:, None, 0] - e[None, :, 0])
    np.testing.assert_allclose(gaps(w_data), gaps(r), atol=1e-6)


def test_argument_checks(rng):
    v = rng.random((6, 4))
    with pytest.raises(ValueError):
        isonmf_solve(-v, 2)
    with pytest.raises(ValueError):
        isonmf_solve(v, 2, IsoNmfConfig(k_nn=6))
    with pytest.raises(ValueError):
        isonmf_solve(v, 0)
    with pytest.raises(ValueError):
        isonmf_solve(v, 5)
    with pytest.raises(ValueError):
        isonmf_solve(v, 2, init=FactorPair(np.ones((6, 3)), np.ones((3, 4))))
