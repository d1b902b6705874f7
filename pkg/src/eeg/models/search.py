"""Grid search over hyperparameters with seeded k-fold cross-validation."""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from ..dataset import CLASSIFICATION, Dataset
from .base import ModelError, PredictionModel
from .gbt import fit_gbt
from .linear import fit_linear
from .tree import fit_tree

FAMILIES = ("linear", "tree", "gbt")

LEGAL = {
    "linear": {"l1_penalty": lambda v: v >= 0},
    "tree": {"min_split": lambda v: int(v) == v and v >= 1,
             "max_leaf": lambda v: int(v) == v and v >= 1,
             "max_depth": lambda v: int(v) == v and v >= 1},
    "gbt": {"learning_rate": lambda v: v > 0,
            "n_estimators": lambda v: int(v) == v and v >= 0,
            "max_depth": lambda v: int(v) == v and v >= 1,
            "subsample": lambda v: 0 < v <= 1},
}

# Reduced desk-scale grids; every entry may be overridden from the config.
DEFAULT_GRIDS = {
    "linear": {"l1_penalty": [2.0 ** i for i in range(-6, 3, 2)]},
    "tree": {"min_split": [2, 8, 32], "max_leaf": [8, 64, 512], "max_depth": [2, 4, 8]},
    "gbt": {"learning_rate": [0.01, 0.1], "n_estimators": [64, 256],
            "max_depth": [2, 4], "subsample": [0.5, 1.0]},
}


@dataclass(frozen=True)
class HyperparameterGrid:
    family: str
    params: dict

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ModelError(f"unknown model family {self.family!r}")
        if not self.params or any(len(v) == 0 for v in self.params.values()):
            raise ModelError("empty hyperparameter grid")
        legal = LEGAL[self.family]
        for name, values in self.params.items():
            if name not in legal:
                raise ModelError(f"{self.family} has no hyperparameter {name!r}")
            for v in values:
                if not legal[name](v):
                    raise ModelError(f"illegal {self.family} {name}={v!r}")

    def points(self) -> list[dict]:
        """Grid points in order: the last listed parameter varies fastest."""
        names = list(self.params)
        return [dict(zip(names, combo)) for combo in itertools.product(*self.params.values())]


@dataclass
class FitReport:
    family: str
    chosen: dict
    fold_losses: list[float]
    grid_losses: list[list[float]]
    final_loss: float
    model: PredictionModel = field(repr=False, compare=False)

    def to_dict(self) -> dict:
        return {"family": self.family, "chosen": self.chosen, "fold_losses": self.fold_losses,
                "grid_losses": self.grid_losses, "final_loss": self.final_loss}


def default_grid(family: str) -> HyperparameterGrid:
    return HyperparameterGrid(family, {k: list(v) for k, v in DEFAULT_GRIDS[family].items()})


def fit_family(family: str, train: Dataset, params: dict, seed: int = 0) -> PredictionModel:
    if family == "linear":
        return fit_linear(train, float(params.get("l1_penalty", 0.0)))
    if family == "tree":
        return fit_tree(train, int(params.get("min_split", 2)), int(params.get("max_leaf", 64)),
                        int(params.get("max_depth", 8)))
    if family == "gbt":
        return fit_gbt(train, float(params.get("learning_rate", 0.1)),
                       int(params.get("n_estimators", 100)), int(params.get("max_depth", 3)),
                       float(params.get("subsample", 1.0)), seed=seed)
    raise ModelError(f"unknown model family {family!r}")


def evaluation_loss(model: PredictionModel, data: Dataset) -> float:
    """Misclassification rate for classifiers, mean squared error otherwise."""
    pred = model.predict(data.X)
    if data.task == CLASSIFICATION:
        return float(np.mean(pred != data.y))
    r = pred - data.y
    return float(np.mean(r * r))


def kfold_indices(n: int, folds: int, seed: int) -> list[np.ndarray]:
    perm = np.random.default_rng(seed).permutation(n)
    return np.array_split(perm, folds)


def grid_search(family: str, grid: HyperparameterGrid | dict | None, train: Dataset,
                folds: int = 4, seed: int = 0) -> FitReport:
    if grid is None:
        grid = default_grid(family)
    elif isinstance(grid, dict):
        grid = HyperparameterGrid(family, grid)
    if grid.family != family:
        raise ModelError(f"grid is for {grid.family!r}, not {family!r}")
    if folds < 2:
        raise ModelError(f"need at least 2 folds, got {folds}")
    if train.n < folds:
        raise ModelError(f"{train.n} observations cannot fill {folds} folds")
    points = grid.points()
    chunks = kfold_indices(train.n, folds, seed)
    grid_losses = []
    for params in points:
        losses = []
        for i, held in enumerate(chunks):
            fit_rows = np.concatenate([c for j, c in enumerate(chunks) if j != i])
            model = fit_family(family, train.subset(fit_rows), params, seed)
            losses.append(evaluation_loss(model, train.subset(held)))
        grid_losses.append(losses)
    means = [float(np.mean(l)) for l in grid_losses]
    # strict < keeps the earliest grid point on ties
    best = 0
    for i, m in enumerate(means):
        if m < means[best]:
            best = i
    model = fit_family(family, train, points[best], seed)
    return FitReport(family, points[best], grid_losses[best], grid_losses,
                     evaluation_loss(model, train), model)
