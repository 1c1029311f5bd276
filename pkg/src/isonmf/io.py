"""Dataset ingestion (CSV matrices, PGM image directories) and artifact writers."""

import csv
import logging
import os
from dataclasses import dataclass
from pathlib import Path

import numpy as np

logger = logging.getLogger(__name__)

# Per-image standard deviation after variance normalization, before clamping.
NORMALIZE_STD = 0.25
NORMALIZE_MEAN = 0.25


class InputError(ValueError):
    """Malformed or unsuitable input data."""


def _is_number(cell):
    try:
        float(cell)
    except ValueError:
        return False
    return True


def load_csv(path, nonnegative=False):
    """Read a rectangular numeric CSV (one point per row) into an ``N x m`` array.

    A first line with any non-numeric cell is taken as a header and skipped.
    """
    path = Path(path)
    try:
        with open(path, newline="") as fh:
            rows = [row for row in csv.reader(fh) if row and any(c.strip() for c in row)]
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc}") from exc
    if not rows:
        raise InputError(f"{path}: file is empty")
    if not all(_is_number(c) for c in rows[0]):
        logger.warning("%s: first line is not numeric, treating it as a header", path)
        rows = rows[1:]
        if not rows:
            raise InputError(f"{path}: no data rows after header")
    width = len(rows[0])
    values = []
    for lineno, row in enumerate(rows, start=1):
        if len(row) != width:
            raise InputError(f"{path}: row {lineno} has {len(row)} fields, expected {width}")
        try:
            values.append([float(c) for c in row])
        except ValueError as exc:
            raise InputError(f"{path}: row {lineno}: {exc}") from exc
    v = np.array(values, dtype=float)
    if not np.all(np.isfinite(v)):
        raise InputError(f"{path}: non-finite values")
    if nonnegative and np.any(v < 0):
        raise InputError(f"{path}: negative entries are not allowed for this method")
    return v


@dataclass
class ImageCorpus:
    """Equal-size grayscale images flattened row-major, one image per matrix row."""

    width: int
    height: int
    filenames: list
    data: np.ndarray

    @property
    def count(self):
        return len(self.filenames)


def _pgm_tokens(buf, pos, count, name):
    """Read ``count`` whitespace-separated header tokens, skipping ``#`` comments."""
    tokens = []
    n = len(buf)
    while len(tokens) < count:
        while pos < n and buf[pos:pos + 1].isspace():
            pos += 1
        if pos < n and buf[pos:pos + 1] == b"#":
            while pos < n and buf[pos:pos + 1] not in (b"\n", b"\r"):
                pos += 1
            continue
        start = pos
        while pos < n and not buf[pos:pos + 1].isspace() and buf[pos:pos + 1] != b"#":
            pos += 1
        if start == pos:
            raise InputError(f"{name}: truncated PGM header")
        tokens.append(buf[start:pos])
    return tokens, pos


def read_pgm(path):
    """Parse a P2 or P5 PGM file; returns ``(pixels as float array h x w, maxval)``."""
    path = Path(path)
    buf = path.read_bytes()
    magic = buf[:2]
    if magic not in (b"P2", b"P5"):
        raise InputError(f"{path.name}: bad PGM magic {magic!r}")
    try:
        (w, h, maxval), pos = _pgm_tokens(buf, 2, 3, path.name)
        w, h, maxval = int(w), int(h), int(maxval)
    except ValueError as exc:
        raise InputError(f"{path.name}: malformed PGM header") from exc
    if w < 1 or h < 1 or not 0 < maxval < 65536:
        raise InputError(f"{path.name}: invalid PGM dimensions or maxval")
    if magic == b"P5":
        pos += 1  # single whitespace byte ends the header
        dtype = np.dtype(">u2") if maxval > 255 else np.dtype("u1")
        need = w * h * dtype.itemsize
        payload = buf[pos:pos + need]
        if len(payload) < need:
            raise InputError(f"{path.name}: truncated pixel data")
        pixels = np.frombuffer(payload, dtype=dtype).astype(float)
    else:
        try:
            raw, _ = _pgm_tokens(buf, pos, w * h, path.name)
            pixels = np.array([int(t) for t in raw], dtype=float)
        except ValueError as exc:
            raise InputError(f"{path.name}: bad pixel data") from exc
    if np.any(pixels > maxval):
        raise InputError(f"{path.name}: pixel value exceeds maxval")
    return pixels.reshape(h, w), maxval


def write_pgm(path, image, maxval=255):
    """Write an integer image (values in ``[0, maxval]``) as binary P5."""
    image = np.asarray(image)
    h, w = image.shape
    dtype = np.dtype(">u2") if maxval > 255 else np.dtype("u1")
    with open(path, "wb") as fh:
        fh.write(f"P5\n{w} {h}\n{maxval}\n".encode("ascii"))
        fh.write(np.clip(image, 0, maxval).astype(dtype).tobytes())


def load_pgm_dir(path):
    """Load every ``*.pgm`` in ``path`` (lexicographic order), scaled to ``[0, 1]``."""
    path = Path(path)
    if not path.is_dir():
        raise InputError(f"{path} is not a directory")
    files = sorted(p for p in path.iterdir() if p.suffix.lower() == ".pgm")
    if not files:
        raise InputError(f"{path}: no .pgm files")
    rows, shape = [], None
    for f in files:
        pixels, maxval = read_pgm(f)
        if shape is None:
            shape = pixels.shape
        elif pixels.shape != shape:
            raise InputError(
                f"{f.name}: size {pixels.shape[1]}x{pixels.shape[0]} differs from "
                f"{shape[1]}x{shape[0]}"
            )
        rows.append(pixels.ravel() / maxval)
    return ImageCorpus(shape[1], shape[0], [f.name for f in files], np.vstack(rows))


def preprocess_normalize(data, std=NORMALIZE_STD, mean=NORMALIZE_MEAN):
    """Per-row variance normalization, mean shift to ``mean`` and clamp to ``[0, 1]``.

    Constant rows are set to ``mean``.
    """
    data = np.asarray(data, dtype=float)
    mu = data.mean(axis=1, keepdims=True)
    sd = data.std(axis=1, keepdims=True)
    flat = sd[:, 0] == 0
    if np.any(flat):
        logger.warning("%d zero-variance rows left at the target mean", int(flat.sum()))
    sd[flat] = 1.0
    out = (data - mu) / sd * std + mean
    out[flat] = mean
    return np.clip(out, 0.0, 1.0)


def format_number(x):
    return format(float(x), ".12g")


def write_matrix_csv(path, matrix):
    matrix = np.atleast_2d(np.asarray(matrix, dtype=float))
    with open(path, "w", newline="") as fh:
        for row in matrix:
            fh.write(",".join(format_number(x) for x in row) + "\n")


def ensure_writable_dir(path):
    path = Path(path)
    try:
        path.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise InputError(f"cannot create output directory {path}: {exc}") from exc
    if not os.access(path, os.W_OK):
        raise InputError(f"output directory {path} is not writable")
    return path
