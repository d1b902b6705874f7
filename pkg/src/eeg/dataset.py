"""Tabular data ingestion, deterministic splitting, [-1, 1] scaling and the
bundled two-dimensional complementary-expertise task.

Synthetic task geometry
-----------------------
Points are drawn uniformly on ``[-1, 1]^2``.

* left half-plane (``x1 < 0``): class 1 inside the diamond
  ``|x1 + 0.5| + |x2| < DIAMOND_RADIUS``, class 0 outside;
* right half-plane (``x1 >= 0``): class 1 where ``sin(2*theta - 3*r) > 0``,
  with ``(r, theta)`` polar coordinates about ``SPIRAL_CENTER``.

Labels are then flipped independently with probability ``noise``.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

CLASSIFICATION = "classification"
REGRESSION = "regression"
TASKS = (CLASSIFICATION, REGRESSION)

DEFAULT_RATIOS = (0.70, 0.09, 0.21)

DIAMOND_CENTER = (-0.5, 0.0)
DIAMOND_RADIUS = 0.6
SPIRAL_CENTER = (0.5, 0.0)
SPIRAL_ARMS = 2.0
SPIRAL_WINDING = 3.0


class DataError(ValueError):
    """Raised for malformed input data."""


@dataclass(frozen=True)
class Observation:
    id: int
    x: np.ndarray
    y: float | int


@dataclass(frozen=True, eq=False)
class Dataset:
    """A design matrix with responses.

    ``ids`` identify rows across splits; they are contiguous from 0 in the
    dataset a file or generator produced, and a subset of those after
    :func:`split`.
    """

    X: np.ndarray
    y: np.ndarray
    task: str
    n_classes: int | None = None
    ids: np.ndarray | None = None
    feature_names: tuple[str, ...] = ()
    classes: tuple[str, ...] = ()

    def __post_init__(self):
        X = np.array(self.X, dtype=float)
        if X.ndim != 2:
            raise DataError(f"X must be 2-D, got shape {X.shape}")
        n, d = X.shape
        if n < 1:
            raise DataError("empty dataset")
        if d < 1:
            raise DataError("observations need at least one feature")
        if not np.all(np.isfinite(X)):
            raise DataError("non-finite feature values")
        if self.task not in TASKS:
            raise DataError(f"unknown task {self.task!r}")
        if self.task == CLASSIFICATION:
            y = np.asarray(self.y).astype(np.int64)
            if self.n_classes is None or self.n_classes < 1:
                raise DataError("classification needs a positive n_classes")
            if y.min() < 0 or y.max() >= self.n_classes:
                raise DataError("class index out of range")
        else:
            y = np.array(self.y, dtype=float)
            if not np.all(np.isfinite(y)):
                raise DataError("non-finite responses")
        if y.shape != (n,):
            raise DataError(f"y has shape {y.shape}, expected ({n},)")
        ids = np.arange(n) if self.ids is None else np.array(self.ids, dtype=np.int64)
        if ids.shape != (n,) or len(np.unique(ids)) != n:
            raise DataError("ids must be unique, one per observation")
        names = self.feature_names or tuple(f"x{j + 1}" for j in range(d))
        if len(names) != d:
            raise DataError("feature_names length does not match X")
        for arr in (X, y, ids):
            arr.setflags(write=False)
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "ids", ids)
        object.__setattr__(self, "feature_names", tuple(names))

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def n_features(self) -> int:
        return self.X.shape[1]

    def __len__(self):
        return self.n

    def observation(self, i: int) -> Observation:
        return Observation(int(self.ids[i]), self.X[i], self.y[i])

    def subset(self, rows) -> "Dataset":
        rows = np.asarray(rows)
        return Dataset(self.X[rows], self.y[rows], self.task, self.n_classes,
                       self.ids[rows], self.feature_names, self.classes)

    def with_arrays(self, X=None, y=None) -> "Dataset":
        return Dataset(self.X if X is None else X, self.y if y is None else y,
                       self.task, self.n_classes, self.ids, self.feature_names,
                       self.classes)


@dataclass(frozen=True)
class SplitDataset:
    train: Dataset
    validation: Dataset
    test: Dataset
    seed: int


@dataclass(frozen=True)
class Scaler:
    """Per-feature affine map onto [-1, 1] fitted on one dataset."""

    x_min: np.ndarray
    x_max: np.ndarray
    y_min: float | None = None
    y_max: float | None = None

    def transform_X(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        if X.ndim != 2 or X.shape[1] != len(self.x_min):
            raise DataError(
                f"scaler fitted on {len(self.x_min)} features, got shape {X.shape}")
        return _affine(X, self.x_min, self.x_max)

    def transform_y(self, y: np.ndarray) -> np.ndarray:
        if self.y_min is None:
            return np.asarray(y)
        return _affine(np.asarray(y, dtype=float), self.y_min, self.y_max)

    def inverse_y(self, y_scaled: np.ndarray) -> np.ndarray:
        if self.y_min is None:
            return np.asarray(y_scaled)
        span = self.y_max - self.y_min
        if span == 0:
            return np.full_like(np.asarray(y_scaled, dtype=float), self.y_min)
        return (np.asarray(y_scaled, dtype=float) + 1.0) * span / 2.0 + self.y_min

    def to_dict(self) -> dict:
        return {
            "x_min": [float(v) for v in self.x_min],
            "x_max": [float(v) for v in self.x_max],
            "y_min": self.y_min,
            "y_max": self.y_max,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Scaler":
        return cls(np.array(d["x_min"], dtype=float), np.array(d["x_max"], dtype=float),
                   d.get("y_min"), d.get("y_max"))


def _affine(v, lo, hi):
    span = np.asarray(hi - lo, dtype=float)
    safe = np.where(span > 0, span, 1.0)
    out = 2.0 * (v - lo) / safe - 1.0
    # constant features map to 0
    return np.where(span > 0, out, 0.0)


def _parse_float(cell: str, row: int, column: str) -> float:
    text = cell.strip()
    if not text:
        raise DataError(f"row {row}, column {column!r}: blank cell")
    try:
        value = float(text)
    except ValueError:
        raise DataError(f"row {row}, column {column!r}: non-numeric value {cell!r}") from None
    if not math.isfinite(value):
        raise DataError(f"row {row}, column {column!r}: non-finite value {cell!r}")
    return value


def load_csv(path, task: str, target_column: str) -> Dataset:
    """Read a headed UTF-8 CSV file into a :class:`Dataset`.

    Row numbers in error messages count the header as row 1. Classification
    targets are re-indexed densely in order of first appearance; the original
    labels are kept in ``Dataset.classes``.
    """
    if task not in TASKS:
        raise DataError(f"unknown task {task!r}")
    path = Path(path)
    if not path.is_file():
        raise DataError(f"no such file: {path}")
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise DataError(f"{path}: empty file (no header row)") from None
        if target_column not in header:
            raise DataError(f"{path}: unknown target column {target_column!r}; "
                            f"columns are {header}")
        t = header.index(target_column)
        feature_cols = [j for j in range(len(header)) if j != t]
        if not feature_cols:
            raise DataError(f"{path}: no feature columns")
        rows, targets = [], []
        for lineno, record in enumerate(reader, start=2):
            if not record or all(not c.strip() for c in record):
                continue
            if len(record) != len(header):
                raise DataError(f"row {lineno}: expected {len(header)} cells, got {len(record)}")
            rows.append([_parse_float(record[j], lineno, header[j]) for j in feature_cols])
            raw = record[t].strip()
            if not raw:
                raise DataError(f"row {lineno}, column {target_column!r}: blank cell")
            targets.append(raw if task == CLASSIFICATION
                           else _parse_float(raw, lineno, target_column))
    if not rows:
        raise DataError(f"{path}: empty dataset")
    names = tuple(header[j] for j in feature_cols)
    if task == CLASSIFICATION:
        labels: dict[str, int] = {}
        y = [labels.setdefault(v, len(labels)) for v in targets]
        return Dataset(np.array(rows), np.array(y), task, len(labels),
                       feature_names=names, classes=tuple(labels))
    return Dataset(np.array(rows), np.array(targets, dtype=float), task, feature_names=names)


def split(data: Dataset, ratios: Sequence[float] = DEFAULT_RATIOS, seed: int = 0) -> SplitDataset:
    """Shuffle with a seeded permutation and cut into train/validation/test.

    Cut points are the cumulative ratios times ``n`` rounded to the nearest
    integer (half to even), so ``n=100`` gives (70, 9, 21) and ``n=10`` gives
    (7, 1, 2).
    """
    ratios = tuple(float(r) for r in ratios)
    if len(ratios) != 3 or min(ratios) <= 0:
        raise DataError(f"ratios must be three positive fractions, got {ratios}")
    if abs(sum(ratios) - 1.0) > 1e-9:
        raise DataError(f"ratios must sum to 1, got {sum(ratios)!r}")
    n = data.n
    if n < 10:
        raise DataError(f"need at least 10 observations to split, got {n}")
    cut1 = int(round(ratios[0] * n))
    cut2 = int(round((ratios[0] + ratios[1]) * n))
    if not 0 < cut1 < cut2 < n:
        raise DataError(f"n={n} too small for ratios {ratios}: a split would be empty")
    perm = np.random.default_rng(seed).permutation(n)
    return SplitDataset(data.subset(perm[:cut1]), data.subset(perm[cut1:cut2]),
                        data.subset(perm[cut2:]), seed)


def fit_scaler(data: Dataset) -> Scaler:
    x_min = data.X.min(axis=0)
    x_max = data.X.max(axis=0)
    if data.task == REGRESSION:
        return Scaler(x_min, x_max, float(data.y.min()), float(data.y.max()))
    return Scaler(x_min, x_max)


def apply_scaler(scaler: Scaler, data: Dataset) -> Dataset:
    X = scaler.transform_X(data.X)
    y = scaler.transform_y(data.y) if data.task == REGRESSION else None
    return data.with_arrays(X, y)


def complementary_label(X: np.ndarray) -> np.ndarray:
    """Noise-free label of the synthetic task at each row of ``X``."""
    x1, x2 = X[:, 0], X[:, 1]
    diamond = np.abs(x1 - DIAMOND_CENTER[0]) + np.abs(x2 - DIAMOND_CENTER[1]) < DIAMOND_RADIUS
    dx, dy = x1 - SPIRAL_CENTER[0], x2 - SPIRAL_CENTER[1]
    r = np.hypot(dx, dy)
    theta = np.arctan2(dy, dx)
    spiral = np.sin(SPIRAL_ARMS * theta - SPIRAL_WINDING * r) > 0
    return np.where(x1 < 0, diamond, spiral).astype(np.int64)


def gen_complementary_2d(n: int = 5000, seed: int = 0, noise: float = 0.0) -> Dataset:
    if n < 100:
        raise DataError(f"n must be at least 100, got {n}")
    if not 0.0 <= noise <= 1.0:
        raise DataError(f"noise must be a fraction, got {noise}")
    rng = np.random.default_rng(seed)
    X = rng.uniform(-1.0, 1.0, size=(n, 2))
    y = complementary_label(X)
    flip = rng.random(n) < noise
    y = np.where(flip, 1 - y, y)
    return Dataset(X, y, CLASSIFICATION, 2, feature_names=("x1", "x2"), classes=("0", "1"))


def save_dataset(data: Dataset, path, scaler: Scaler | None = None,
                 target_column: str = "y") -> None:
    """Write ``data`` as CSV plus a ``<path>.json`` sidecar.

    Sidecar fields: ``task``, ``n_classes``, ``classes``, ``target_column``,
    ``feature_names``, ``scaler`` (``x_min``/``x_max``/``y_min``/``y_max`` or null).
    Classification targets are written as their original labels.
    """
    path = Path(path)
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow([*data.feature_names, target_column])
        for xi, yi in zip(data.X, data.y):
            if data.task == CLASSIFICATION:
                label = data.classes[yi] if data.classes else str(int(yi))
            else:
                label = repr(float(yi))
            w.writerow([repr(float(v)) for v in xi] + [label])
    sidecar = {
        "task": data.task,
        "n_classes": data.n_classes,
        "classes": list(data.classes),
        "target_column": target_column,
        "feature_names": list(data.feature_names),
        "scaler": scaler.to_dict() if scaler is not None else None,
    }
    Path(str(path) + ".json").write_text(json.dumps(sidecar, indent=2, sort_keys=True) + "\n")


def load_dataset(path) -> tuple[Dataset, Scaler | None]:
    """Inverse of :func:`save_dataset`."""
    meta = json.loads(Path(str(path) + ".json").read_text())
    data = load_csv(path, meta["task"], meta["target_column"])
    if meta["task"] == CLASSIFICATION and meta.get("classes"):
        order = {c: i for i, c in enumerate(meta["classes"])}
        y = np.array([order[data.classes[k]] for k in data.y])
        data = Dataset(data.X, y, data.task, len(order), feature_names=data.feature_names,
                       classes=tuple(meta["classes"]))
    scaler = Scaler.from_dict(meta["scaler"]) if meta.get("scaler") else None
    return data, scaler
