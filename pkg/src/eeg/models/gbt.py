"""Gradient-boosted regression trees.

Each stage fits a squared-error tree to the negative gradient of the loss
(squared error, binary log-loss on one logit, or softmax log-loss with one
tree per class) on a seeded row subsample, then sets leaf values by a single
Newton step. Stage updates are scaled by ``learning_rate`` and halved while
they would increase the full training loss, so training loss never goes up.
"""

from __future__ import annotations

import numpy as np
from scipy.special import logsumexp

from ..dataset import CLASSIFICATION, Dataset
from ._tree import Tree, grow_tree
from .base import PROB_FLOOR, ModelError, PredictionModel, one_hot, sigmoid, softmax

MAX_HALVINGS = 30


class GBTModel(PredictionModel):
    family = "gbt"

    def __init__(self, task, n_features, n_classes, base_score, trees, learning_rate,
                 n_estimators, max_depth, subsample, seed, train_loss=()):
        super().__init__(task, n_features, n_classes)
        self.base_score = np.asarray(base_score, dtype=float).reshape(-1)
        # trees[stage][output]; leaf values already include learning rate
        self.trees = [list(stage) for stage in trees]
        self.learning_rate = float(learning_rate)
        self.n_estimators = int(n_estimators)
        self.max_depth = int(max_depth)
        self.subsample = float(subsample)
        self.seed = int(seed)
        self.train_loss = [float(v) for v in train_loss]

    def decision_function(self, X) -> np.ndarray:
        X = self._check(X)
        return self._scores(X)

    def _scores(self, X):
        F = np.tile(self.base_score, (X.shape[0], 1))
        for stage in self.trees:
            for k, tree in enumerate(stage):
                F[:, k] += tree.predict(X)[:, 0]
        return F

    def _raw(self, X):
        F = self._scores(X)
        if not self.is_classifier:
            return F[:, 0]
        if F.shape[1] == 1:
            p = sigmoid(F[:, 0])
            return np.column_stack([1.0 - p, p])
        return softmax(F)

    def params(self):
        return {"learning_rate": self.learning_rate, "n_estimators": self.n_estimators,
                "max_depth": self.max_depth, "subsample": self.subsample, "seed": self.seed,
                "base_score": self.base_score.tolist(),
                "trees": [[t.to_dict() for t in stage] for stage in self.trees],
                "train_loss": self.train_loss}

    @classmethod
    def from_params(cls, task, n_features, n_classes, p):
        trees = [[Tree.from_dict(t) for t in stage] for stage in p["trees"]]
        return cls(task, n_features, n_classes, p["base_score"], trees, p["learning_rate"],
                   p["n_estimators"], p["max_depth"], p["subsample"], p["seed"],
                   p.get("train_loss", ()))


def _loss(kind, F, target):
    if kind == "squared":
        r = F[:, 0] - target
        return float(np.mean(r * r))
    if kind == "binary":
        z = F[:, 0]
        return float(np.mean(np.logaddexp(0.0, z) - target * z))
    return float(np.mean(logsumexp(F, axis=1) - np.sum(F * target, axis=1)))


def fit_gbt(train: Dataset, learning_rate: float = 0.1, n_estimators: int = 100,
            max_depth: int = 3, subsample: float = 1.0, task: str | None = None,
            seed: int = 0) -> GBTModel:
    task = task or train.task
    if not learning_rate > 0:
        raise ModelError(f"learning_rate must be positive, got {learning_rate}")
    if not 0 < subsample <= 1:
        raise ModelError(f"subsample must be in (0, 1], got {subsample}")
    if n_estimators < 0 or max_depth < 1:
        raise ModelError("n_estimators must be >= 0 and max_depth >= 1")
    X, n = train.X, train.n
    if task == CLASSIFICATION:
        k = train.n_classes
        prior = np.bincount(train.y, minlength=k) / n
        logp = np.log(np.maximum(prior, PROB_FLOOR))
        if k <= 2:
            kind, target = "binary", train.y.astype(float)
            base = np.array([logp[1] - logp[0]]) if k == 2 else np.array([0.0])
        else:
            kind, target = "softmax", one_hot(train.y, k)
            base = logp
    else:
        kind, target = "squared", train.y.astype(float)
        base = np.array([target.mean()])

    rng = np.random.default_rng(seed)
    F = np.tile(base, (n, 1))
    loss = _loss(kind, F, target)
    losses = [loss]
    stages = []
    n_sub = max(1, int(round(subsample * n)))
    for _ in range(n_estimators):
        rows = np.sort(rng.choice(n, size=n_sub, replace=False)) if n_sub < n else np.arange(n)
        Xs = X[rows]
        stage, update = [], np.zeros_like(F)
        if kind == "squared":
            resid = target - F[:, 0]
            tree = grow_tree(Xs, resid[rows], max_depth=max_depth)
            stage.append(tree)
            update[:, 0] = tree.predict(X)[:, 0]
        elif kind == "binary":
            p = sigmoid(F[:, 0])
            resid = target - p
            hess = p * (1.0 - p)
            r_s, h_s = resid[rows], hess[rows]
            tree = grow_tree(Xs, r_s, max_depth=max_depth,
                             leaf_value=lambda ix: [r_s[ix].sum() / max(h_s[ix].sum(), PROB_FLOOR)])
            stage.append(tree)
            update[:, 0] = tree.predict(X)[:, 0]
        else:
            P = softmax(F)
            kf = F.shape[1]
            for c in range(kf):
                r_s = (target[:, c] - P[:, c])[rows]
                a = np.abs(r_s)
                h_s = a * (1.0 - a)
                tree = grow_tree(
                    Xs, r_s, max_depth=max_depth,
                    leaf_value=lambda ix, r_s=r_s, h_s=h_s: [
                        (kf - 1) / kf * r_s[ix].sum() / max(h_s[ix].sum(), PROB_FLOOR)])
                stage.append(tree)
                update[:, c] = tree.predict(X)[:, 0]
        step = learning_rate
        new_loss = _loss(kind, F + step * update, target)
        halvings = 0
        while new_loss > loss and halvings < MAX_HALVINGS:
            step /= 2.0
            halvings += 1
            new_loss = _loss(kind, F + step * update, target)
        if new_loss > loss:
            step, new_loss = 0.0, loss
        F = F + step * update
        loss = new_loss
        losses.append(loss)
        stages.append([t.scaled(step) for t in stage])
    return GBTModel(task, train.n_features, train.n_classes, base, stages, learning_rate,
                    n_estimators, max_depth, subsample, seed, losses)
