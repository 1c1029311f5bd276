"""Acceptance criteria, each checked at its stated tolerance and time limit.

Every test records one PASS/FAIL line; the lines are printed in the pytest
terminal summary (and directly when this file is run as a script).
"""

import subprocess
import sys
import time
from pathlib import Path

import numpy as np
import pytest

from conftest import brute_furthest, brute_knn, fd_gradient, relative_gap
from isonmf.datasets import BENCHMARK_3X3, bump_manifold, quarter_arc, write_image_corpus
from isonmf.isometric import IsoNmfConfig, IsoNmfProblem, isonmf_solve
from isonmf.linalg import truncated_svd_error
from isonmf.metrics import evaluate, reconstruction_error
from isonmf.mfnu import MfnuConfig, build_problem, constraint_residuals, mfnu_solve, unfold_spectrum
from isonmf.neighbors import all_furthest, all_k_nearest, build_kdtree, neighbor_graph
from isonmf.nmf import NmfConfig, clipped_svd, exact_nmf_construction, nmf_objective, nmf_solve

pytestmark = pytest.mark.slow


class Clock:
    def __enter__(self):
        self.start = time.perf_counter()
        return self

    def __exit__(self, *exc):
        self.elapsed = time.perf_counter() - self.start


def record(log, number, title, ok, detail, elapsed, limit):
    within = elapsed < limit
    status = "PASS" if ok and within else "FAIL"
    line = f"[{status}] {number}. {title}: {detail} ({elapsed:.2f} s, limit {limit:g} s)"
    log.append(line)
    print(line)
    assert ok, line
    assert within, line


def test_1_exact_construction(acceptance_log):
    rng = np.random.default_rng(1)
    worst, ks_ok = 0.0, True
    mats = [rng.random((10, 8)) * (rng.random((10, 8)) < 0.7) for _ in range(50)]
    with Clock() as clock:
        for v in mats:
            pair = exact_nmf_construction(v)
            worst = max(worst, float(np.max(np.abs(v - pair.product()))))
            ks_ok &= pair.k == np.count_nonzero(v)
    record(acceptance_log, 1, "exact construction", worst <= 1e-12 and ks_ok,
           f"max |V-WH| = {worst:.2e}, k = nnz(V) for all 50: {ks_ok}", clock.elapsed, 1.0)


def test_2_dual_tree_oracle(acceptance_log):
    rng = np.random.default_rng(2)
    mismatches, tree_time = [], 0.0
    for n in (100, 500, 2000):
        for dim in (2, 5, 10):
            pts = rng.standard_normal((n, dim))
            with Clock() as clock:
                tree = build_kdtree(pts)
                nn = {k: all_k_nearest(tree, k)[0] for k in (1, 3, 5)}
                far = all_furthest(tree)[0]
            tree_time += clock.elapsed
            for k, idx in nn.items():
                if not np.array_equal(idx, brute_knn(pts, k)[0]):
                    mismatches.append(f"knn N={n} d={dim} k={k}")
            if not np.array_equal(far, brute_furthest(pts)[0]):
                mismatches.append(f"furthest N={n} d={dim}")
    record(acceptance_log, 2, "dual-tree vs brute force", not mismatches,
           f"27 k-NN + 9 furthest configurations, mismatches: {mismatches or 'none'}",
           tree_time, 30.0)


def test_3_gradient_checks(acceptance_log):
    rng = np.random.default_rng(3)
    worst = {"nmf": 0.0, "mfnu": 0.0, "isonmf dW": 0.0, "isonmf dH": 0.0}
    with Clock() as clock:
        for _ in range(20):
            n, m, k = int(rng.integers(4, 21)), int(rng.integers(2, 11)), int(rng.integers(1, 5))
            v = rng.random((n, m))
            fun = nmf_objective(v, k)
            x = rng.random(n * k + k * m)
            worst["nmf"] = max(worst["nmf"], relative_gap(fun(x)[1], fd_gradient(fun, x)))

            prob = build_problem(v, k, neighbor_graph(v, 2))
            lam = rng.standard_normal(len(prob.constraints))
            fun = lambda z: prob.lagrangian(z, lam, 5.0)
            x = rng.standard_normal(n * k)
            worst["mfnu"] = max(worst["mfnu"], relative_gap(fun(x)[1], fd_gradient(fun, x)))

            iso = IsoNmfProblem(v, k, neighbor_graph(v, 2))
            lam = rng.standard_normal(len(iso.pairs))
            mu = rng.standard_normal(n * m)
            fun = lambda z: iso.lagrangian(z, lam, mu, 5.0, 3.0)
            x = rng.random(n * k + k * m)
            g, fd = fun(x)[1], fd_gradient(fun, x)
            worst["isonmf dW"] = max(worst["isonmf dW"], relative_gap(g[:n * k], fd[:n * k]))
            worst["isonmf dH"] = max(worst["isonmf dH"], relative_gap(g[n * k:], fd[n * k:]))
    detail = ", ".join(f"{name} {val:.1e}" for name, val in worst.items())
    record(acceptance_log, 3, "analytic vs finite-difference gradients",
           max(worst.values()) <= 1e-5, f"worst relative gaps: {detail}", clock.elapsed, 10.0)


def test_4_benchmark_3x3(acceptance_log):
    with Clock() as clock:
        pair, _ = nmf_solve(BENCHMARK_3X3, 2, config=NmfConfig(restarts=200, seed=0))
    err = reconstruction_error(BENCHMARK_3X3, pair)
    floor = truncated_svd_error(BENCHMARK_3X3, 2) / np.linalg.norm(BENCHMARK_3X3)
    record(acceptance_log, 4, "3x3 benchmark, best of 200 restarts", err <= 0.05,
           f"relative error {err:.4%} (rank-2 SVD floor {floor:.4%})", clock.elapsed, 20.0)


def test_5_mfnu_arc(acceptance_log):
    v = quarter_arc(200)
    with Clock() as clock:
        r1, rep1, graph = mfnu_solve(v, MfnuConfig(dim=1, k=2))
        r2, rep2, _ = mfnu_solve(v, MfnuConfig(dim=2, k=2), graph=graph)
    targets = graph.constraint_pairs()[1]
    rel = float(np.max(np.abs(constraint_residuals(r1, graph)) / targets))
    lam = unfold_spectrum(r2)
    ratio = float(lam[1] / lam[0])
    record(acceptance_log, 5, "MFNU arc unfolding", rel <= 1e-4 and ratio <= 0.01,
           f"d'=1 max relative residual {rel:.2e} ({rep1.reason}); "
           f"d'=2 lambda2/lambda1 = {ratio:.2e} ({rep2.reason})", clock.elapsed, 60.0)


def test_6_isonmf_vs_nmf(acceptance_log):
    v, _, _ = bump_manifold(n=100, k=8, m=64, seed=0)
    with Clock() as clock:
        graph = neighbor_graph(v, 3)
        iso, rep, _ = isonmf_solve(v, 8, IsoNmfConfig(k_nn=3), graph=graph)
        nmf, _ = nmf_solve(v, 8, config=NmfConfig(restarts=1, seed=0))
    e_iso, e_nmf = evaluate(v, iso, graph), evaluate(v, nmf, graph)
    ok = (e_iso.dist_error <= 0.05 and e_iso.dist_error <= 0.5 * e_nmf.dist_error
          and e_nmf.rec_error <= e_iso.rec_error)
    record(acceptance_log, 6, "isoNMF vs NMF on a 100-point synthetic manifold", ok,
           f"dist error isoNMF {e_iso.dist_error:.2%} vs NMF {e_nmf.dist_error:.2%}; "
           f"rec error NMF {e_nmf.rec_error:.2%} vs isoNMF {e_iso.rec_error:.2%} "
           f"(isoNMF {rep.reason})", clock.elapsed, 300.0)


def test_7_svd_compactness(acceptance_log):
    rng = np.random.default_rng(7)
    worst = -np.inf
    with Clock() as clock:
        for trial in range(20):
            v = rng.random((10, 8))
            for k in (1, 2, 4):
                pair, _ = nmf_solve(v, k, config=NmfConfig(seed=trial))
                gap = truncated_svd_error(v, k) - np.linalg.norm(v - pair.product())
                worst = max(worst, gap)
    record(acceptance_log, 7, "SVD never worse than NMF", worst <= 1e-9,
           f"max (SVD error - NMF error) = {worst:.2e} over 60 cases", clock.elapsed, 60.0)


def test_8_csvd_perron(acceptance_log):
    rng = np.random.default_rng(8)
    worst = 0.0
    with Clock() as clock:
        for _ in range(20):
            v = np.outer(rng.random(int(rng.integers(2, 12))), rng.random(int(rng.integers(2, 12))))
            worst = max(worst, float(np.linalg.norm(v - clipped_svd(v, 1).product())))
    record(acceptance_log, 8, "CSVD exact on rank-1 non-negative", worst <= 1e-10,
           f"max Frobenius error {worst:.2e} over 20 outer products", clock.elapsed, 1.0)


def _tree_bytes(root):
    root = Path(root)
    return {str(p.relative_to(root)): p.read_bytes() for p in sorted(root.rglob("*")) if p.is_file()}


def test_9_cli_determinism(acceptance_log, tmp_path):
    v, _, _ = bump_manifold(n=30, k=4, m=16, seed=9)
    np.savetxt(tmp_path / "manifold.csv", v, delimiter=",")
    np.savetxt(tmp_path / "arc.csv", quarter_arc(40), delimiter=",")
    write_image_corpus(tmp_path / "images", v, 4, 4)
    runs = {
        "nmf": ["--input", "manifold.csv", "--method", "nmf", "--rank", "4", "--restarts", "5", "--seed", "7"],
        "csvd": ["--input", "manifold.csv", "--method", "csvd", "--rank", "4"],
        "exact": ["--input", "manifold.csv", "--method", "exact"],
        "isonmf": ["--input", "images", "--format", "pgm-dir", "--method", "isonmf", "--rank", "4"],
        "mfnu": ["--input", "arc.csv", "--method", "mfnu", "--rank", "2", "--k-neighbors", "2"],
    }
    differing = []
    with Clock() as clock:
        for method, args in runs.items():
            trees = []
            for rep in ("a", "b"):
                out = tmp_path / f"{method}_{rep}"
                proc = subprocess.run([sys.executable, "-m", "isonmf", "fit", *args, "--out", str(out)],
                                      cwd=tmp_path, capture_output=True, text=True)
                assert proc.returncode in (0, 2), proc.stderr
                trees.append(_tree_bytes(out))
            if trees[0] != trees[1] or not trees[0]:
                differing.append(method)
    record(acceptance_log, 9, "CLI determinism", not differing,
           f"{len(runs)} methods run twice, differing output trees: {differing or 'none'}",
           clock.elapsed, 120.0)


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q"]))
