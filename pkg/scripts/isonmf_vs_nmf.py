"""Compare isoNMF with classic NMF on the synthetic manifold or a PGM corpus."""

import argparse
import time

from isonmf.datasets import bump_manifold
from isonmf.io import load_pgm_dir, preprocess_normalize
from isonmf.isometric import IsoNmfConfig, isonmf_solve
from isonmf.metrics import evaluate
from isonmf.neighbors import neighbor_graph
from isonmf.nmf import NmfConfig, clipped_svd, nmf_solve


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--seeds", type=int, default=3)
    parser.add_argument("--rank", type=int, default=8)
    parser.add_argument("--k-neighbors", type=int, default=3)
    parser.add_argument("--images", help="directory of PGM images instead of synthetic data")
    args = parser.parse_args()

    print(f"{'seed':>4} {'method':>7} {'rec':>8} {'sparsity':>8} {'dist':>8} {'time':>6}  status")
    for seed in range(args.seeds):
        if args.images:
            v = preprocess_normalize(load_pgm_dir(args.images).data)
        else:
            v, _, _ = bump_manifold(seed=seed)
        graph = neighbor_graph(v, args.k_neighbors)
        runs = []
        t = time.perf_counter()
        pair, rep = nmf_solve(v, args.rank, config=NmfConfig(restarts=1, seed=seed))
        runs.append(("nmf", pair, rep.reason, time.perf_counter() - t))
        t = time.perf_counter()
        runs.append(("csvd", clipped_svd(v, args.rank), "-", time.perf_counter() - t))
        t = time.perf_counter()
        pair, rep, _ = isonmf_solve(v, args.rank, IsoNmfConfig(k_nn=args.k_neighbors), graph=graph)
        runs.append(("isonmf", pair, rep.reason, time.perf_counter() - t))
        for name, pair, reason, elapsed in runs:
            e = evaluate(v, pair, graph)
            print(f"{seed:>4} {name:>7} {e.rec_error:>8.2%} {e.sparsity:>8.2%} "
                  f"{e.dist_error:>8.2%} {elapsed:>6.1f}  {reason}")
        if args.images:
            break


if __name__ == "__main__":
    main()
