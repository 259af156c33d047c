"""Datasets, noisy-copy generation and mini-batch partitions."""

import csv
import math
import os
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    EmptyDataError,
    IngestionError,
    MissingColumnError,
    MissingFileError,
    NonNumericCellError,
    ParameterError,
    ShapeError,
)
from .numkit import GaussSource, as_mat, as_vec, gauss_mat

MODES = ("online", "offline", "none")
STANDARDIZE_CONVENTION = "population (divide by n)"


@dataclass(frozen=True)
class Dataset:
    X: np.ndarray
    y: np.ndarray
    columns: tuple = None

    def __post_init__(self):
        X = as_mat(self.X, "X")
        y = as_vec(self.y, "y")
        if X.shape[0] != y.shape[0]:
            raise ShapeError(f"X has {X.shape[0]} rows but y has {y.shape[0]} entries")
        if X.shape[0] < 1 or X.shape[1] < 1:
            raise ShapeError("dataset needs n >= 1 and m >= 1")
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "y", y)
        if self.columns is not None:
            object.__setattr__(self, "columns", tuple(self.columns))

    @property
    def n(self):
        return self.X.shape[0]

    @property
    def m(self):
        return self.X.shape[1]

    def mse(self, w):
        r = self.y - self.X @ w
        return float(r @ r) / self.n


@dataclass(frozen=True)
class SyntheticSpec:
    n: int = 20
    m: int = 15
    sigma_x: float = 0.5
    sigma: float = 0.2
    seed: int = 0


def gen_synthetic(spec):
    """Draw ``x_ij ~ N(0, sigma_x^2)`` and ``y_i = x_i1 - x_i2 + eps_i``.

    Each input column has its own stream, so the first columns of an
    ``m=100`` dataset coincide with the ``m=15`` dataset of the same seed
    (extra columns are appended irrelevant inputs).
    """
    if spec.m < 2:
        raise ParameterError(f"synthetic model uses two inputs; m={spec.m} < 2")
    if spec.n < 1:
        raise ParameterError(f"n must be >= 1, got {spec.n}")
    if spec.sigma_x <= 0 or spec.sigma < 0:
        raise ParameterError("need sigma_x > 0 and sigma >= 0")
    src = GaussSource(spec.seed).child("synthetic")
    X = np.column_stack(
        [gauss_mat(src.child("x", j), spec.n, 1, spec.sigma_x)[:, 0] for j in range(spec.m)]
    )
    eps = gauss_mat(src.child("eps"), spec.n, 1, spec.sigma)[:, 0]
    y = X[:, 0] - X[:, 1] + eps
    return Dataset(X, y)


def load_csv(path, target):
    """Read a header-first numeric CSV; ``target`` names the output column."""
    if not os.path.isfile(path):
        raise MissingFileError(f"no such file: {path}")
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise EmptyDataError(f"{path}: file is empty")
    header = [h.strip() for h in rows[0]]
    if target not in header:
        raise MissingColumnError(target)
    body = [r for r in rows[1:] if any(c.strip() for c in r)]
    if not body:
        raise EmptyDataError(f"{path}: no data rows after header")
    values = np.empty((len(body), len(header)))
    for i, row in enumerate(body):
        if len(row) != len(header):
            raise IngestionError(
                f"row {i + 2} has {len(row)} cells, header has {len(header)}"
            )
        for j, cell in enumerate(row):
            try:
                values[i, j] = float(cell)
            except ValueError:
                raise NonNumericCellError(i + 2, header[j], cell) from None
            if not math.isfinite(values[i, j]):
                raise NonNumericCellError(i + 2, header[j], cell)
    t = header.index(target)
    keep = [j for j in range(len(header)) if j != t]
    if not keep:
        raise IngestionError("no input columns besides the target")
    return Dataset(values[:, keep], values[:, t], tuple(header[j] for j in keep))


def standardize(d):
    """Zero-mean, unit population-sd input columns; ``y`` is left alone."""
    mean = d.X.mean(axis=0)
    sd = d.X.std(axis=0)
    for j, s in enumerate(sd):
        if not s > 0:
            name = d.columns[j] if d.columns else f"column {j}"
            raise ParameterError(f"cannot standardize constant input {name!r}")
    return Dataset((d.X - mean) / sd, d.y, d.columns)


def _norm_mode(mode):
    mode = str(mode).replace("-", "").replace("_", "").lower()
    if mode not in MODES:
        raise ParameterError(f"noise mode must be one of {MODES}, got {mode!r}")
    return mode


@dataclass(frozen=True)
class AugmentationSpec:
    K: int = 0
    tau: float = 0.0
    mode: str = "online"
    seed: int = 0

    def __post_init__(self):
        if int(self.K) != self.K or self.K < 0:
            raise ParameterError(f"K must be a non-negative integer, got {self.K}")
        if not self.tau >= 0:
            raise ParameterError(f"tau must be >= 0, got {self.tau}")
        object.__setattr__(self, "K", int(self.K))
        object.__setattr__(self, "mode", _norm_mode(self.mode))

    @property
    def effective_K(self):
        return 0 if self.mode == "none" else self.K

    def noise_sd(self, n):
        return self.tau / math.sqrt(n)


class NoiseBank:
    """Supplies the noise matrices ``U[t, k]`` (``n x m``) of each copy.

    ``U[t, 0]`` is always zero.  Off-line banks return the same ``U_k`` for
    every epoch; on-line banks draw ``U[t, k]`` from a stream keyed by
    ``(t, k)``, so any epoch can be regenerated in isolation.
    """

    def __init__(self, n, m, aug):
        self.n = n
        self.m = m
        self.mode = aug.mode
        self.K = aug.effective_K
        self.tau = aug.tau
        self.sd = aug.noise_sd(n)
        self.seed = aug.seed
        self._src = GaussSource(aug.seed).child("noise", n, m)
        if self.mode == "offline":
            fixed = np.stack([self._draw("offline", k) for k in range(1, self.K + 1)]) \
                if self.K else np.zeros((0, n, m))
            fixed.setflags(write=False)
            self._fixed = fixed
        else:
            self._fixed = None

    def _draw(self, *key):
        return gauss_mat(self._src.child(*key), self.n, self.m, self.sd)

    def get(self, t, k):
        if not 0 <= k <= self.K:
            raise ParameterError(f"copy index k={k} outside 0..{self.K}")
        if k == 0:
            return np.zeros((self.n, self.m))
        if self._fixed is not None:
            return self._fixed[k - 1]
        return self._draw("online", t, k)

    def copies(self, t):
        """Stack ``U[t, 1..K]`` into a ``(K, n, m)`` array."""
        if self._fixed is not None:
            return self._fixed
        if self.K == 0:
            return np.zeros((0, self.n, self.m))
        return np.stack([self.get(t, k) for k in range(1, self.K + 1)])


def make_noise_bank(d, aug):
    return NoiseBank(d.n, d.m, aug)


@dataclass(frozen=True)
class BatchPartition:
    rho: int
    Q: int
    blocks: tuple = field(repr=False)

    @property
    def n(self):
        return self.rho * self.Q


def partition(n, rho):
    """Contiguous, unshuffled blocks ``B_q`` of size ``rho`` (0-based indices)."""
    if rho < 1 or n < 1 or n % rho:
        raise ParameterError(f"batch size rho={rho} does not divide n={n}")
    Q = n // rho
    blocks = tuple(np.arange(q * rho, (q + 1) * rho) for q in range(Q))
    return BatchPartition(rho, Q, blocks)


def slice_rows(d, block):
    """Return ``(X[block], y[block])`` keeping the order of ``block``."""
    idx = np.asarray(block, dtype=np.intp)
    if idx.ndim != 1 or np.any(idx < 0) or np.any(idx >= d.n):
        raise ParameterError(f"block indices must lie in 0..{d.n - 1}")
    return d.X[idx], d.y[idx]
