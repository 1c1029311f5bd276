"""Command-line driver: load data, run one method, write the artifact set.

Usage::

    isonmf fit --input faces/ --format pgm-dir --method isonmf --rank 8 --out runs/iso
"""

import argparse
import json
import logging
import math
import sys
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from . import io
from .isometric import IsoNmfConfig, isonmf_solve
from .linalg import svd
from .metrics import DISTANCE_ERROR_DEFINITION, EvalReport, distance_error, evaluate
from .mfnu import MfnuConfig, mfnu_solve, unfold_spectrum
from .neighbors import neighbor_graph
from .nmf import NmfConfig, clipped_svd, exact_nmf_construction, nmf_solve
from .optimize import STALLED, AugLagConfig, LbfgsbConfig

logger = logging.getLogger(__name__)

METHODS = ("nmf", "isonmf", "mfnu", "csvd", "exact")
FORMATS = ("csv", "pgm-dir")
PREPROCESS = ("none", "normalize")
NONNEGATIVE_METHODS = ("nmf", "isonmf", "csvd", "exact")

EXIT_OK = 0
EXIT_INPUT = 1
EXIT_STALLED = 2


@dataclass
class RunConfig:
    input: str
    out: str
    format: str = "csv"
    method: str = "nmf"
    rank: int = 2
    k_neighbors: int = 3
    seed: int = 0
    restarts: int = 1
    preprocess: str = "none"
    max_outer: int | None = None
    max_inner: int | None = None
    tol_feas: float | None = None
    tol_grad: float | None = None

    def validate(self):
        if self.method not in METHODS:
            raise io.InputError(f"unknown method {self.method!r}")
        if self.format not in FORMATS:
            raise io.InputError(f"unknown format {self.format!r}")
        if self.preprocess not in PREPROCESS:
            raise io.InputError(f"unknown preprocessing {self.preprocess!r}")
        if self.rank < 1:
            raise io.InputError("rank must be >= 1")
        if self.restarts < 1:
            raise io.InputError("restarts must be >= 1")
        if self.k_neighbors < 1:
            raise io.InputError("k-neighbors must be >= 1")
        for name in ("max_outer", "max_inner"):
            val = getattr(self, name)
            if val is not None and val < 1:
                raise io.InputError(f"{name.replace('_', '-')} must be >= 1")
        for name in ("tol_feas", "tol_grad"):
            val = getattr(self, name)
            if val is not None and not val > 0:
                raise io.InputError(f"{name.replace('_', '-')} must be positive")
        if self.preprocess == "normalize" and self.format != "pgm-dir":
            raise io.InputError("normalize preprocessing applies to image corpora only")

    def echo(self):
        """Settings that determine the results (the output location does not)."""
        out = asdict(self)
        out.pop("out")
        return out


@dataclass
class RunResult:
    out_dir: Path
    reason: str | None
    metrics: EvalReport

    @property
    def exit_code(self):
        return EXIT_STALLED if self.reason == STALLED else EXIT_OK


def _aug_lag_config(cfg):
    base = AugLagConfig()
    return AugLagConfig(
        max_outer=cfg.max_outer or base.max_outer,
        max_inner=cfg.max_inner or base.max_inner,
        tol_grad=cfg.tol_grad or base.tol_grad,
    )


def _load(cfg):
    corpus = None
    if cfg.format == "csv":
        v = io.load_csv(cfg.input, nonnegative=cfg.method in NONNEGATIVE_METHODS)
    else:
        corpus = io.load_pgm_dir(cfg.input)
        v = corpus.data
        if cfg.preprocess == "normalize":
            v = io.preprocess_normalize(v)
    if cfg.method in ("isonmf", "mfnu") and not cfg.k_neighbors < v.shape[0]:
        raise io.InputError(f"k-neighbors must be below the number of points ({v.shape[0]})")
    if cfg.method in ("csvd", "isonmf") and cfg.rank > min(v.shape):
        raise io.InputError(f"rank {cfg.rank} exceeds min(N, m) = {min(v.shape)}")
    return v, corpus


def principal_axes(r):
    """Rotate an embedding onto its principal axes (distances unchanged)."""
    res = svd(r, min(r.shape))
    out = np.zeros_like(r)
    out[:, : res.rank] = res.u * res.s
    return out


def _scatter_columns(spectrum, count=2):
    """Indices of the largest spectrum entries; ties go to the lower index."""
    order = sorted(range(len(spectrum)), key=lambda i: (-spectrum[i], i))
    return order[:count]


def _json_safe(obj):
    if isinstance(obj, dict):
        return {str(k): _json_safe(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_json_safe(v) for v in obj]
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return float(io.format_number(x)) if math.isfinite(x) else str(x)
    if isinstance(obj, np.integer):
        return int(obj)
    return obj


def _write_prototypes(out_dir, h, corpus):
    proto_dir = out_dir / "prototypes"
    proto_dir.mkdir(exist_ok=True)
    digits = max(3, len(str(h.shape[0] - 1)))
    for idx, row in enumerate(h):
        peak = row.max(initial=0.0)
        scaled = row / peak * 255.0 if peak > 0 else np.zeros_like(row)
        image = np.rint(scaled).reshape(corpus.height, corpus.width)
        io.write_pgm(proto_dir / f"proto_{idx:0{digits}d}.pgm", image)


def run(cfg):
    """Execute one configured experiment and write its artifacts."""
    cfg.validate()
    out_dir = io.ensure_writable_dir(cfg.out)
    v, corpus = _load(cfg)
    lines = [
        f"method {cfg.method}, data {v.shape[0]}x{v.shape[1]}, rank {cfg.rank}, "
        f"k-neighbors {cfg.k_neighbors}, seed {cfg.seed}"
    ]
    log = lines.append
    graph = None
    if cfg.k_neighbors < v.shape[0]:
        graph = neighbor_graph(v, cfg.k_neighbors)

    report = None
    pair = None
    if cfg.method == "nmf":
        solver = LbfgsbConfig(tol_grad=cfg.tol_grad or 1e-8, max_iter=cfg.max_inner or 5000)
        pair, report = nmf_solve(v, cfg.rank, config=NmfConfig(cfg.restarts, cfg.seed, solver))
    elif cfg.method == "csvd":
        pair = clipped_svd(v, cfg.rank)
    elif cfg.method == "exact":
        pair = exact_nmf_construction(v)
        log(f"exact construction: inner rank {pair.k} (requested rank ignored)")
    elif cfg.method == "isonmf":
        iso_cfg = IsoNmfConfig(k_nn=cfg.k_neighbors, solver=_aug_lag_config(cfg))
        if cfg.tol_feas is not None:
            iso_cfg.tol_iso = cfg.tol_feas
        pair, report, graph = isonmf_solve(v, cfg.rank, iso_cfg, graph=graph, log=log)
    else:
        mf_cfg = MfnuConfig(dim=cfg.rank, k=cfg.k_neighbors, seed=cfg.seed,
                            solver=_aug_lag_config(cfg))
        if cfg.tol_feas is not None:
            mf_cfg.tol_feas = cfg.tol_feas
        r, report, graph = mfnu_solve(v, mf_cfg, graph=graph, log=log)
        r = principal_axes(r)

    if pair is not None:
        metrics = evaluate(v, pair, graph)
        io.write_matrix_csv(out_dir / "W.csv", pair.w)
        io.write_matrix_csv(out_dir / "H.csv", pair.h)
        embedding = pair.w
        if corpus is not None:
            _write_prototypes(out_dir, pair.h, corpus)
    else:
        metrics = EvalReport(
            rec_error=None,
            sparsity=None,
            dist_error=distance_error(r, graph),
            spectrum=[float(s) for s in unfold_spectrum(r)],
        )
        io.write_matrix_csv(out_dir / "R.csv", r)
        embedding = r

    io.write_matrix_csv(out_dir / "spectrum.csv", np.array(metrics.spectrum)[:, None])
    cols = _scatter_columns(metrics.spectrum)
    io.write_matrix_csv(out_dir / "scatter.csv", embedding[:, cols])

    payload = {
        "config": cfg.echo(),
        "data_shape": list(v.shape),
        "inner_rank": int(embedding.shape[1]),
        "metrics": metrics.to_dict(),
        "distance_error_definition": DISTANCE_ERROR_DEFINITION,
        "normalization": {"std": io.NORMALIZE_STD, "mean": io.NORMALIZE_MEAN,
                          "applied": cfg.preprocess == "normalize"},
        "scatter_components": cols,
        "solver": report.to_dict() if report is not None else None,
    }
    with open(out_dir / "metrics.json", "w") as fh:
        json.dump(_json_safe(payload), fh, indent=2, sort_keys=True)
        fh.write("\n")

    if report is not None:
        log(f"result: {report.reason}; objective {io.format_number(report.objective)}; "
            f"max violation {io.format_number(report.max_violation)}")
        if report.outer_iterations:
            log("residual history (max |c| per family, one line per outer iteration):")
            for row in report.history:
                log("  " + " ".join(io.format_number(x) for x in row))
    with open(out_dir / "run.log", "w") as fh:
        fh.write("\n".join(lines) + "\n")
    return RunResult(out_dir, report.reason if report is not None else None, metrics)


def build_parser():
    parser = argparse.ArgumentParser(prog="isonmf", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging on stderr")
    sub = parser.add_subparsers(dest="command", required=True)
    fit = sub.add_parser("fit", help="factorize or embed a dataset")
    fit.add_argument("--input", required=True, help="CSV file or directory of PGM images")
    fit.add_argument("--format", choices=FORMATS, default="csv")
    fit.add_argument("--method", choices=METHODS, default="nmf")
    fit.add_argument("--rank", type=int, default=2, help="inner rank (embedding dimension for mfnu)")
    fit.add_argument("--k-neighbors", type=int, default=3)
    fit.add_argument("--seed", type=int, default=0)
    fit.add_argument("--restarts", type=int, default=1)
    fit.add_argument("--preprocess", choices=PREPROCESS, default="none")
    fit.add_argument("--out", required=True, help="output directory")
    fit.add_argument("--max-outer", type=int)
    fit.add_argument("--max-inner", type=int)
    fit.add_argument("--tol-feas", type=float)
    fit.add_argument("--tol-grad", type=float)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s: %(message)s")
    fields = {k: v for k, v in vars(args).items() if k not in ("command", "verbose")}
    try:
        result = run(RunConfig(**fields))
    except io.InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    if result.exit_code == EXIT_STALLED:
        print("solver stalled: constraint residuals plateaued above tolerance "
              f"(see {result.out_dir / 'run.log'})", file=sys.stderr)
    return result.exit_code


if __name__ == "__main__":
    sys.exit(main())
