"""Datasets: the heteroscedastic sinusoid, CSV ingestion, scaling and folds."""
from __future__ import annotations

import csv
import hashlib
import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .exceptions import ConfigurationError, DataError

log = logging.getLogger(__name__)

Z_95 = 1.96
IDEAL_COLUMNS = ("ideal_lower", "ideal_upper")


@dataclass
class Dataset:
    """Raw (unscaled) features and targets, plus optional ideal bounds."""

    X: np.ndarray
    y: np.ndarray
    feature_names: list = field(default_factory=list)
    ideal_lower: np.ndarray | None = None
    ideal_upper: np.ndarray | None = None

    def __post_init__(self):
        self.X = np.asarray(self.X, dtype=np.float64)
        if self.X.ndim == 1:
            self.X = self.X[:, None]
        self.y = np.asarray(self.y, dtype=np.float64).reshape(-1)
        if self.X.shape[0] != self.y.size:
            raise DataError(f"{self.X.shape[0]} feature rows but {self.y.size} targets")
        if not self.feature_names:
            self.feature_names = [f"x{j}" for j in range(self.X.shape[1])]

    def __len__(self):
        return self.y.size

    @property
    def has_ideal_bounds(self):
        return self.ideal_lower is not None and self.ideal_upper is not None

    def fingerprint(self):
        h = hashlib.sha256()
        for a in (self.X, self.y, self.ideal_lower, self.ideal_upper):
            if a is not None:
                h.update(np.ascontiguousarray(a).tobytes())
        return h.hexdigest()


# -- synthetic sinusoid ----------------------------------------------------

@dataclass
class SyntheticSpec:
    n_points: int = 1000
    x_range: tuple = (-5.0, 5.0)
    seed: int = 0
    noise: bool = True

    def __post_init__(self):
        if self.n_points < 2:
            raise ConfigurationError(f"n_points must be >= 2, got {self.n_points}")
        if not self.x_range[0] < self.x_range[1]:
            raise ConfigurationError(f"empty x_range {self.x_range}")


def noiseless(x):
    return 5.0 * np.cos(x) + 10.0


def noise_std(x):
    """Standard deviation of the additive noise at ``x``."""
    return 2.0 * np.cos(1.2 * x) + 2.0


def ideal_bounds(x, z=Z_95):
    """Ideal 95% bounds ``(upper, lower)`` of the synthetic generator at ``x``."""
    x = np.asarray(x, dtype=np.float64)
    center, half = noiseless(x), z * noise_std(x)
    return center + half, center - half


def generate_synthetic(spec=None):
    spec = spec or SyntheticSpec()
    rng = np.random.default_rng(spec.seed)
    x = rng.uniform(spec.x_range[0], spec.x_range[1], size=spec.n_points)
    v = rng.standard_normal(spec.n_points)
    if not spec.noise:
        v[:] = 0.0
    y = noiseless(x) + noise_std(x) * v
    upper, lower = ideal_bounds(x)
    return Dataset(x[:, None], y, ["x"], ideal_lower=lower, ideal_upper=upper)


# -- CSV -------------------------------------------------------------------

def write_csv(dataset, path, target_column="y"):
    """Write ``dataset`` with shortest round-trip float formatting."""
    header = list(dataset.feature_names) + [target_column]
    cols = [dataset.X[:, j] for j in range(dataset.X.shape[1])] + [dataset.y]
    if dataset.has_ideal_bounds:
        header += list(IDEAL_COLUMNS)
        cols += [dataset.ideal_lower, dataset.ideal_upper]
    path = Path(path)
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in zip(*cols):
            w.writerow([repr(float(v)) for v in row])
    return path


def load_csv(path, target_column="y", exclude=()):
    """Read a numeric CSV with a header row.

    Every column other than the target, ``exclude`` and the ideal-bound
    columns becomes a feature.
    """
    path = Path(path)
    try:
        with path.open(newline="", encoding="utf-8") as fh:
            rows = list(csv.reader(fh))
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from exc
    rows = [r for r in rows if r]
    if not rows:
        raise DataError(f"{path}: file is empty")
    header = [h.strip() for h in rows[0]]
    if target_column not in header:
        raise DataError(f"{path}: target column {target_column!r} not found in header {header}")
    if len(rows) == 1:
        raise DataError(f"{path}: header present but no data rows")

    values = np.empty((len(rows) - 1, len(header)))
    for i, row in enumerate(rows[1:], start=2):
        if len(row) != len(header):
            raise DataError(f"{path}: row {i} has {len(row)} cells, expected {len(header)}")
        for j, cell in enumerate(row):
            cell = cell.strip()
            if cell == "":
                raise DataError(f"{path}: row {i}, column {header[j]!r} is blank")
            try:
                values[i - 2, j] = float(cell)
            except ValueError:
                raise DataError(
                    f"{path}: row {i}, column {header[j]!r}: cannot parse {cell!r} as a number") from None
            if not np.isfinite(values[i - 2, j]):
                raise DataError(f"{path}: row {i}, column {header[j]!r} is not finite")

    skip = {target_column, *exclude, *IDEAL_COLUMNS}
    feat = [j for j, h in enumerate(header) if h not in skip]
    if not feat:
        raise DataError(f"{path}: no feature columns besides {target_column!r}")
    lower = upper = None
    if all(c in header for c in IDEAL_COLUMNS):
        lower = values[:, header.index(IDEAL_COLUMNS[0])]
        upper = values[:, header.index(IDEAL_COLUMNS[1])]
    return Dataset(values[:, feat], values[:, header.index(target_column)],
                   [header[j] for j in feat], ideal_lower=lower, ideal_upper=upper)


# -- normalization ---------------------------------------------------------

@dataclass
class FeatureStats:
    mean: np.ndarray
    std: np.ndarray
    keep: np.ndarray  # boolean mask of non-constant columns

    def apply(self, X):
        X = np.asarray(X, dtype=np.float64)
        return (X[:, self.keep] - self.mean) / self.std

    def invert(self, Z):
        return np.asarray(Z) * self.std + self.mean


@dataclass
class TargetStats:
    """Affine target scaling ``(y - offset) / scale``.

    ``kind`` records how it was fit: ``"minmax"`` (offset = min, scale =
    max - min) or ``"zscore"`` (offset = mean, scale = std).
    """

    offset: float
    scale: float
    kind: str = "minmax"

    def __post_init__(self):
        if not self.scale > 0:
            raise ConfigurationError(f"degenerate target scaling (scale={self.scale})")

    @classmethod
    def from_range(cls, lo, hi):
        if not hi > lo:
            raise ConfigurationError(f"degenerate target range [{lo}, {hi}]")
        return cls(float(lo), float(hi) - float(lo), "minmax")

    @classmethod
    def fit(cls, y, kind="minmax"):
        y = np.asarray(y, dtype=np.float64)
        if kind == "minmax":
            return cls.from_range(y.min(), y.max())
        if kind == "zscore":
            return cls(float(y.mean()), float(y.std()), "zscore")
        raise ConfigurationError(f"unknown target scaling {kind!r}; expected 'minmax' or 'zscore'")

    def normalize(self, y):
        return (np.asarray(y, dtype=np.float64) - self.offset) / self.scale

    def denormalize(self, y):
        return np.asarray(y, dtype=np.float64) * self.scale + self.offset


IDENTITY_TARGET = TargetStats(0.0, 1.0)


def fit_feature_stats(X):
    X = np.asarray(X, dtype=np.float64)
    std = X.std(axis=0)
    keep = std > 0
    if not keep.all():
        log.warning("dropping zero-variance feature columns %s", np.flatnonzero(~keep).tolist())
    if not keep.any():
        raise DataError("every feature column is constant on the training rows")
    return FeatureStats(X[:, keep].mean(axis=0), std[keep], keep)


@dataclass
class DatasetSplit:
    """Scaled training/validation arrays with the statistics used to scale them."""

    X_train: np.ndarray
    y_train: np.ndarray
    X_val: np.ndarray
    y_val: np.ndarray
    feature_stats: FeatureStats
    target_stats: TargetStats
    train_idx: np.ndarray | None = None
    val_idx: np.ndarray | None = None
    ideal_val: tuple | None = None  # (lower, upper) in original units

    @property
    def y_val_raw(self):
        return self.target_stats.denormalize(self.y_val)


def fit_apply_normalization(X_train, y_train, X_other, y_other, target_scaling="minmax"):
    """z-score features and scale the target using training statistics only.

    The target is min-max scaled by default; ``target_scaling="zscore"``
    standardizes it instead.
    """
    X_train = np.asarray(X_train, dtype=np.float64)
    y_train = np.asarray(y_train, dtype=np.float64)
    if X_train.shape[0] == 0:
        raise DataError("empty training set")
    fs = fit_feature_stats(X_train)
    ts = TargetStats.fit(y_train, target_scaling)
    return DatasetSplit(fs.apply(X_train), ts.normalize(y_train),
                        fs.apply(X_other), ts.normalize(y_other), fs, ts)


def split_dataset(dataset, train_idx, val_idx, target_scaling="minmax"):
    split = fit_apply_normalization(dataset.X[train_idx], dataset.y[train_idx],
                                    dataset.X[val_idx], dataset.y[val_idx], target_scaling)
    split.train_idx, split.val_idx = np.asarray(train_idx), np.asarray(val_idx)
    if dataset.has_ideal_bounds:
        split.ideal_val = (dataset.ideal_lower[val_idx], dataset.ideal_upper[val_idx])
    return split


# -- folds -----------------------------------------------------------------

def kfold_assignment(n, k, rng):
    """Fold id per sample; fold sizes differ by at most one."""
    if not 2 <= k <= n:
        raise ConfigurationError(f"need 2 <= k <= n for k-fold, got k={k}, n={n}")
    ids = np.empty(n, dtype=np.int64)
    ids[rng.permutation(n)] = np.arange(n) % k
    return ids


def make_folds(n, scheme="5x2", seed=0, k=10):
    """List of ``(train_idx, val_idx)`` pairs.

    ``scheme`` is ``"kfold"`` (``k`` folds) or ``"5x2"`` (five repetitions of
    a random 2-fold split). Depends only on ``(n, scheme, seed, k)``.
    """
    rng = np.random.default_rng([seed, n, 7919])
    folds = []
    if scheme == "kfold":
        reps, kk = 1, k
    elif scheme == "5x2":
        reps, kk = 5, 2
    else:
        raise ConfigurationError(f"unknown CV scheme {scheme!r}; expected 'kfold' or '5x2'")
    for _ in range(reps):
        ids = kfold_assignment(n, kk, rng)
        for f in range(kk):
            folds.append((np.flatnonzero(ids != f), np.flatnonzero(ids == f)))
    return folds
