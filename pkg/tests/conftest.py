"""Shared oracles: finite differences and brute-force neighbor search."""

import numpy as np
import pytest
from scipy.spatial.distance import cdist


def fd_gradient(fun, x):
    """Central differences with step ``1e-5 * (1 + |x_i|)``."""
    x = np.asarray(x, dtype=float)
    grad = np.zeros_like(x)
    for i in range(x.size):
        h = 1e-5 * (1.0 + abs(x[i]))
        xp, xm = x.copy(), x.copy()
        xp[i] += h
        xm[i] -= h
        grad[i] = (fun(xp)[0] - fun(xm)[0]) / (2 * h)
    return grad


def relative_gap(a, b):
    return float(np.linalg.norm(a - b) / max(np.linalg.norm(b), 1e-12))


def brute_knn(points, k):
    """All-pairs k-NN, lower index first among equal distances."""
    d = cdist(points, points, "sqeuclidean")
    n = len(points)
    idx = np.empty((n, k), dtype=np.int64)
    for i in range(n):
        others = np.delete(np.arange(n), i)
        order = np.lexsort((others, d[i, others]))
        idx[i] = others[order[:k]]
    return idx, d


def brute_furthest(points):
    """All-pairs furthest neighbor, lower index first among equal distances."""
    d = cdist(points, points, "sqeuclidean")
    n = len(points)
    out = np.empty(n, dtype=np.int64)
    for i in range(n):
        others = np.delete(np.arange(n), i)
        out[i] = others[np.lexsort((others, -d[i, others]))[0]]
    return out, d


@pytest.fixture
def rng():
    return np.random.default_rng(20240)


ACCEPTANCE_LINES = []


@pytest.fixture(scope="session")
def acceptance_log():
    return ACCEPTANCE_LINES


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
