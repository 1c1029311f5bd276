"""Distance evaluations and wall time of the dual-tree searches versus N."""

import argparse
import time

import numpy as np

from isonmf.neighbors import all_furthest, all_k_nearest, build_kdtree


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--dim", type=int, default=3)
    parser.add_argument("--k", type=int, default=3)
    parser.add_argument("--sizes", type=int, nargs="+", default=[500, 1000, 2000, 4000, 8000])
    args = parser.parse_args()

    rng = np.random.default_rng(0)
    print(f"{'N':>6} {'knn evals/N^2':>14} {'knn s':>7} {'far evals/N^2':>14} {'far s':>7}")
    for n in args.sizes:
        tree = build_kdtree(rng.random((n, args.dim)))
        t = time.perf_counter()
        _, _, knn = all_k_nearest(tree, args.k)
        t_knn = time.perf_counter() - t
        t = time.perf_counter()
        _, _, far = all_furthest(tree)
        t_far = time.perf_counter() - t
        print(f"{n:>6} {knn.distance_evals / n**2:>14.4f} {t_knn:>7.2f} "
              f"{far.distance_evals / n**2:>14.4f} {t_far:>7.2f}")


if __name__ == "__main__":
    main()
