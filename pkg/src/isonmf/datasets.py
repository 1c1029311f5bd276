"""Small seeded datasets used by the tests, the acceptance run and the scripts."""

from pathlib import Path

import numpy as np

from .io import write_pgm

BENCHMARK_3X3 = np.array([
    [0.45, 0.434, 0.35],
    [0.70, 0.64, 0.43],
    [0.22, 0.01, 0.30],
])


def quarter_arc(n=200, radius=1.0):
    """``n`` equispaced points on the quarter circle of the given radius."""
    t = np.linspace(0.0, np.pi / 2, n)
    return radius * np.column_stack([np.cos(t), np.sin(t)])


def ray_points(direction, count=5):
    """Rows ``t * direction`` for ``t = 1..count``."""
    return np.outer(np.arange(1, count + 1, dtype=float), np.asarray(direction, dtype=float))


def bump_manifold(n=100, k=8, m=64, width=0.35, overlap=0.2, noise=0.01, seed=0):
    """Non-negative data on a 2-D manifold with an (almost) rank-``k`` structure.

    Each point ``p`` in the unit square gets coefficients
    ``exp(-|p - c_l|^2 / (2 width^2))`` against ``k`` random centres ``c_l``;
    the prototypes are disjoint pixel blocks plus ``overlap`` times uniform
    clutter, and ``noise`` times uniform noise is added on top. Returns
    ``(V, W0, H0)``.
    """
    if m % k:
        raise ValueError("m must be a multiple of k")
    rng = np.random.default_rng(seed)
    points = rng.random((n, 2))
    centres = rng.random((k, 2))
    w0 = np.exp(-((points[:, None, :] - centres[None]) ** 2).sum(-1) / (2 * width**2))
    block = m // k
    h0 = np.zeros((k, m))
    for l in range(k):
        h0[l, l * block:(l + 1) * block] = 1.0 / np.sqrt(block)
    if overlap:
        h0 += overlap * rng.random((k, m))
    v = w0 @ h0
    if noise:
        v = v + noise * rng.random((n, m))
    return v, w0, h0


def write_image_corpus(path, data, width, height, prefix="img"):
    """Write rows of ``data`` (values in ``[0, 1]``) as 8-bit P5 images."""
    path = Path(path)
    path.mkdir(parents=True, exist_ok=True)
    peak = max(float(np.max(data)), 1e-300)
    digits = max(3, len(str(len(data) - 1)))
    for idx, row in enumerate(data):
        image = np.rint(np.clip(row / peak, 0.0, 1.0) * 255).reshape(height, width)
        write_pgm(path / f"{prefix}_{idx:0{digits}d}.pgm", image)
    return path
