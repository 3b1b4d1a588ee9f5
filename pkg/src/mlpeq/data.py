"""Benchmark data, CSV I/O and [-1, 1] normalization."""
from __future__ import annotations

import os
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np

SCHWEFEL_CONST = 418.9829


class DataError(ValueError):
    """Malformed or degenerate dataset."""


@dataclass(frozen=True)
class NormalizationSpec:
    """Per-dimension affine maps sending ``[lo, hi]`` onto ``[-1, 1]``."""

    in_lo: np.ndarray
    in_hi: np.ndarray
    out_lo: float
    out_hi: float

    def __post_init__(self):
        lo = np.asarray(self.in_lo, dtype=np.float64).reshape(-1)
        hi = np.asarray(self.in_hi, dtype=np.float64).reshape(-1)
        if lo.shape != hi.shape:
            raise DataError("in_lo and in_hi differ in length")
        bad = np.flatnonzero(~(lo < hi))
        if bad.size:
            raise DataError(f"input dimension {bad[0] + 1} has zero range")
        if not float(self.out_lo) < float(self.out_hi):
            raise DataError("target has zero range")
        object.__setattr__(self, "in_lo", lo)
        object.__setattr__(self, "in_hi", hi)
        object.__setattr__(self, "out_lo", float(self.out_lo))
        object.__setattr__(self, "out_hi", float(self.out_hi))

    @property
    def out_half_range(self) -> float:
        return (self.out_hi - self.out_lo) / 2.0

    def normalize_inputs(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        return 2.0 * (X - self.in_lo) / (self.in_hi - self.in_lo) - 1.0

    def denormalize_inputs(self, Xn) -> np.ndarray:
        return self.in_lo + (np.asarray(Xn) + 1.0) * (self.in_hi - self.in_lo) / 2.0

    def normalize_targets(self, u) -> np.ndarray:
        u = np.asarray(u, dtype=np.float64)
        return 2.0 * (u - self.out_lo) / (self.out_hi - self.out_lo) - 1.0

    def denormalize_targets(self, un) -> np.ndarray:
        return self.out_lo + (np.asarray(un) + 1.0) * (self.out_hi - self.out_lo) / 2.0


@dataclass(frozen=True)
class Dataset:
    """Raw inputs ``X`` (N, n) and targets ``u`` (N,).

    ``norm`` optionally declares the normalization ranges; when it is None
    the ranges are taken from the data.
    """

    X: np.ndarray
    u: np.ndarray
    norm: Optional[NormalizationSpec] = None

    def __post_init__(self):
        X = np.array(self.X, dtype=np.float64, ndmin=2)
        u = np.array(self.u, dtype=np.float64).reshape(-1)
        if X.ndim != 2 or X.shape[0] != u.shape[0] or u.shape[0] < 1:
            raise DataError(f"X has shape {X.shape} but u has {u.shape[0]} entries")
        if not (np.isfinite(X).all() and np.isfinite(u).all()):
            raise DataError("dataset contains NaN or Inf")
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "u", u)

    @property
    def n_points(self) -> int:
        return self.X.shape[0]

    @property
    def n_inputs(self) -> int:
        return self.X.shape[1]


def schwefel(x) -> float:
    """Schwefel test function ``418.9829*dim - sum(x_i * sin(sqrt(|x_i|)))``.

    Accepts a single point (dim,) or a batch (N, dim).
    """
    x = np.asarray(x, dtype=np.float64)
    dim = x.shape[-1]
    return SCHWEFEL_CONST * dim - np.sum(x * np.sin(np.sqrt(np.abs(x))), axis=-1)


def sample_schwefel(n_points: int, d_dim: int, lo: float = -500.0, hi: float = 500.0,
                    seed: int = 0) -> Dataset:
    """Draw ``n_points`` i.i.d. uniform inputs on ``[lo, hi]**d_dim`` and label them.

    The declared input range ``[lo, hi]`` is recorded for normalization, the
    target range is taken from the sample.
    """
    if n_points < 1 or d_dim < 1:
        raise DataError("n_points and d_dim must be >= 1")
    if not lo < hi:
        raise DataError(f"invalid range [{lo}, {hi}]")
    rng = np.random.default_rng(seed)
    X = rng.uniform(lo, hi, size=(n_points, d_dim))
    u = schwefel(X)
    norm = None
    if n_points > 1 and u.min() < u.max():
        norm = NormalizationSpec(np.full(d_dim, lo), np.full(d_dim, hi), u.min(), u.max())
    return Dataset(X, u, norm)


def data_ranges(ds: Dataset) -> NormalizationSpec:
    """Normalization spec from the observed ranges of ``ds``."""
    X, u = ds.X, ds.u
    lo, hi = X.min(axis=0), X.max(axis=0)
    flat = np.flatnonzero(~(lo < hi))
    if flat.size:
        raise DataError(f"input dimension {flat[0] + 1} is constant over the dataset")
    if not u.min() < u.max():
        raise DataError("target is constant over the dataset")
    return NormalizationSpec(lo, hi, u.min(), u.max())


def normalize(ds: Dataset):
    """Map inputs and targets of ``ds`` onto [-1, 1].

    Returns
    -------
    Xn : ndarray (N, n)
    un : ndarray (N,)
    norm : NormalizationSpec
    """
    norm = ds.norm if ds.norm is not None else data_ranges(ds)
    if norm.in_lo.size != ds.n_inputs:
        raise DataError(
            f"normalization has {norm.in_lo.size} input dims, dataset has {ds.n_inputs}")
    return norm.normalize_inputs(ds.X), norm.normalize_targets(ds.u), norm


def format_float(v: float) -> str:
    return format(float(v), ".17g")


def save_csv(ds: Dataset, path) -> None:
    """Write ``x1,...,xn,u`` with 17 significant digits (atomic replace)."""
    path = Path(path)
    n = ds.n_inputs
    lines = [",".join([f"x{k + 1}" for k in range(n)] + ["u"])]
    for row, target in zip(ds.X, ds.u):
        lines.append(",".join([format_float(v) for v in row] + [format_float(target)]))
    tmp = path.with_name(path.name + ".tmp")
    with open(tmp, "w", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")
    os.replace(tmp, path)


def load_csv(path) -> Dataset:
    """Read a CSV written by :func:`save_csv` (header row required; last column is the target)."""
    with open(path, "r", newline="") as fh:
        lines = fh.read().splitlines()
    rows = [(i + 1, ln) for i, ln in enumerate(lines) if ln.strip()]
    if not rows:
        raise DataError(f"{path}: no data rows")
    header = rows[0][1].split(",")
    ncol = len(header)
    if ncol < 2:
        raise DataError(f"{path}: line {rows[0][0]}: need at least one input and a target column")
    values = []
    for lineno, ln in rows[1:]:
        cells = ln.split(",")
        if len(cells) != ncol:
            raise DataError(
                f"{path}: line {lineno}: expected {ncol} columns, found {len(cells)}")
        try:
            values.append([float(c) for c in cells])
        except ValueError as exc:
            raise DataError(f"{path}: line {lineno}: non-numeric cell ({exc})") from None
    if not values:
        raise DataError(f"{path}: no data rows")
    arr = np.array(values, dtype=np.float64)
    if not np.isfinite(arr).all():
        raise DataError(f"{path}: non-finite value")
    return Dataset(arr[:, :-1], arr[:, -1])
