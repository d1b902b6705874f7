"""Underlying-task losses, sufficiency indicators and the four-way partition.

Categories, by ``(s_g, s_b)``: ``Zg`` = (1, 0), ``Zb`` = (0, 1),
``Z2`` = (1, 1), ``Z0`` = (0, 0).
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .dataset import CLASSIFICATION, REGRESSION, Dataset
from .models.base import PROB_FLOOR, PredictionModel

CLASSIFICATION_EQUALITY = "classification-equality"
REGRESSION_EPSILON = "regression-epsilon"
ALWAYS = "always-sufficient"
NEVER = "never-sufficient"
MODES = (CLASSIFICATION_EQUALITY, REGRESSION_EPSILON, ALWAYS, NEVER)

ZG, ZB, Z2, Z0 = "Zg", "Zb", "Z2", "Z0"
CATEGORIES = (ZG, ZB, Z2, Z0)
# ascending glass-box desirability
RANK_ORDER = (ZB, Z0, Z2, ZG)


class SufficiencyError(ValueError):
    pass


@dataclass(frozen=True)
class SufficiencyConfig:
    mode: str
    epsilon: float | None = None

    def __post_init__(self):
        if self.mode not in MODES:
            raise SufficiencyError(f"unknown sufficiency mode {self.mode!r}")
        if (self.mode == REGRESSION_EPSILON) != (self.epsilon is not None):
            raise SufficiencyError("epsilon is required for, and only for, regression-epsilon mode")
        if self.epsilon is not None and not self.epsilon >= 0:
            raise SufficiencyError(f"epsilon must be non-negative, got {self.epsilon}")

    def to_dict(self):
        return {"mode": self.mode, "epsilon": self.epsilon}


def default_mode(task: str) -> str:
    return CLASSIFICATION_EQUALITY if task == CLASSIFICATION else REGRESSION_EPSILON


def underlying_loss(task: str, prediction, y) -> np.ndarray | float:
    """Cross-entropy ``-log p_y`` (probabilities floored) or squared error.

    Accepts one observation or a batch: a probability vector / matrix for
    classification, a real / vector for regression.
    """
    if task == CLASSIFICATION:
        P = np.asarray(prediction, dtype=float)
        single = P.ndim == 1
        P = np.atleast_2d(P)
        yi = np.atleast_1d(np.asarray(y)).astype(np.int64)
        if np.any(np.abs(P.sum(axis=1) - 1.0) > 1e-6):
            raise SufficiencyError("probability vector not normalized")
        out = -np.log(np.maximum(P[np.arange(len(yi)), yi], PROB_FLOOR))
        out = np.maximum(out, 0.0)
        return float(out[0]) if single else out
    r = np.asarray(prediction, dtype=float) - np.asarray(y, dtype=float)
    out = r * r
    return float(out) if np.ndim(out) == 0 else out


def model_losses(model: PredictionModel, data: Dataset) -> np.ndarray:
    return underlying_loss(data.task, model.outputs(data.X), data.y)


def epsilon_from_validation(g: PredictionModel, b: PredictionModel, validation: Dataset) -> float:
    """Lower of the two models' mean validation losses."""
    if validation.task != REGRESSION:
        raise SufficiencyError("epsilon selection applies to regression tasks")
    if validation.n == 0:
        raise SufficiencyError("empty validation set")
    return float(min(np.mean(model_losses(g, validation)), np.mean(model_losses(b, validation))))


def sufficiency_from(config: SufficiencyConfig, task: str, outputs, y) -> np.ndarray:
    """Vectorised indicator from model outputs for a batch."""
    y = np.asarray(y)
    n = len(y)
    if config.mode == ALWAYS:
        return np.ones(n, dtype=np.int64)
    if config.mode == NEVER:
        return np.zeros(n, dtype=np.int64)
    if config.mode == CLASSIFICATION_EQUALITY:
        if task != CLASSIFICATION:
            raise SufficiencyError("classification-equality mode needs a classification task")
        return (np.argmax(np.atleast_2d(outputs), axis=1) == y).astype(np.int64)
    if task != REGRESSION:
        raise SufficiencyError("regression-epsilon mode needs a regression task")
    return (underlying_loss(task, outputs, y) < config.epsilon).astype(np.int64)


def sufficiency(model: PredictionModel, z, config: SufficiencyConfig, task: str | None = None):
    """Indicator for a single observation ``z = (x, y)`` or a whole :class:`Dataset`."""
    if isinstance(z, Dataset):
        return sufficiency_from(config, z.task, model.outputs(z.X), z.y)
    x, y = z
    out = model.outputs(np.asarray(x, dtype=float)[None, :])
    return int(sufficiency_from(config, task or model.task, out, [y])[0])


def categorize(s_g, s_b) -> np.ndarray:
    s_g = np.asarray(s_g)
    s_b = np.asarray(s_b)
    cats = np.empty(len(s_g), dtype=object)
    cats[(s_g == 1) & (s_b == 0)] = ZG
    cats[(s_g == 0) & (s_b == 1)] = ZB
    cats[(s_g == 1) & (s_b == 1)] = Z2
    cats[(s_g == 0) & (s_b == 0)] = Z0
    return cats


@dataclass(frozen=True, eq=False)
class SufficiencyPartition:
    ids: np.ndarray
    s_g: np.ndarray
    s_b: np.ndarray
    loss_g: np.ndarray | None = None
    loss_b: np.ndarray | None = None

    def __post_init__(self):
        s_g = np.asarray(self.s_g, dtype=np.int64)
        s_b = np.asarray(self.s_b, dtype=np.int64)
        if s_g.shape != s_b.shape or s_g.ndim != 1:
            raise SufficiencyError("s_g and s_b must be equal-length vectors")
        if not (np.isin(s_g, (0, 1)).all() and np.isin(s_b, (0, 1)).all()):
            raise SufficiencyError("indicators must be 0 or 1")
        object.__setattr__(self, "s_g", s_g)
        object.__setattr__(self, "s_b", s_b)
        object.__setattr__(self, "ids", np.asarray(self.ids, dtype=np.int64))

    @property
    def n(self) -> int:
        return len(self.s_g)

    @property
    def categories(self) -> np.ndarray:
        return categorize(self.s_g, self.s_b)

    @property
    def counts(self) -> dict[str, int]:
        cats = self.categories
        return {c: int(np.sum(cats == c)) for c in CATEGORIES}

    @property
    def n_g(self):
        return self.counts[ZG]

    @property
    def n_b(self):
        return self.counts[ZB]

    @property
    def n_2(self):
        return self.counts[Z2]

    @property
    def n_0(self):
        return self.counts[Z0]

    def to_csv(self, path) -> None:
        with Path(path).open("w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["id", "s_g", "s_b", "category"])
            for row in zip(self.ids.tolist(), self.s_g.tolist(), self.s_b.tolist(), self.categories):
                w.writerow(row)


def partition(g: PredictionModel, b: PredictionModel, data: Dataset,
              config: SufficiencyConfig) -> SufficiencyPartition:
    if g.n_features != b.n_features or g.n_features != data.n_features:
        raise SufficiencyError("models and data disagree on feature dimension")
    out_g, out_b = g.outputs(data.X), b.outputs(data.X)
    return SufficiencyPartition(
        data.ids,
        sufficiency_from(config, data.task, out_g, data.y),
        sufficiency_from(config, data.task, out_b, data.y),
        underlying_loss(data.task, out_g, data.y),
        underlying_loss(data.task, out_b, data.y),
    )
