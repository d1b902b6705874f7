"""CART classification and regression trees."""

from __future__ import annotations

import math

import numpy as np

from ..dataset import CLASSIFICATION, Dataset
from ._tree import Tree, grow_tree
from .base import ModelError, PredictionModel, one_hot


class TreeModel(PredictionModel):
    family = "tree"

    def __init__(self, task, n_features, n_classes, tree: Tree, min_split, max_leaf, max_depth):
        super().__init__(task, n_features, n_classes)
        self.tree = tree
        self.min_split = int(min_split)
        self.max_leaf = int(max_leaf)
        self.max_depth = int(max_depth)

    def _raw(self, X):
        out = self.tree.predict(X)
        return out if self.is_classifier else out[:, 0]

    def params(self):
        return {"min_split": self.min_split, "max_leaf": self.max_leaf,
                "max_depth": self.max_depth, "tree": self.tree.to_dict()}

    @classmethod
    def from_params(cls, task, n_features, n_classes, p):
        return cls(task, n_features, n_classes, Tree.from_dict(p["tree"]),
                   p["min_split"], p["max_leaf"], p["max_depth"])


def fit_tree(train: Dataset, min_split: int = 2, max_leaf: int = 64, max_depth: int = 8,
             task: str | None = None) -> TreeModel:
    """Fit a CART tree with Gini (classification) or variance (regression) splits.

    A node is split only if it holds at least ``min_split`` points, and each
    child must keep at least ``ceil(min_split / 2)`` of them. Growth is
    best-first until ``max_leaf`` leaves or ``max_depth`` is reached.
    """
    task = task or train.task
    for name, v in (("min_split", min_split), ("max_leaf", max_leaf), ("max_depth", max_depth)):
        if int(v) < 1:
            raise ModelError(f"{name} must be positive, got {v}")
    if task == CLASSIFICATION:
        Y = one_hot(train.y, train.n_classes)
    else:
        Y = train.y.astype(float)[:, None]
    tree = grow_tree(train.X, Y, max_depth=max_depth, max_leaf=max_leaf,
                     min_split=min_split, min_leaf=math.ceil(min_split / 2))
    return TreeModel(task, train.n_features, train.n_classes, tree, min_split, max_leaf, max_depth)
