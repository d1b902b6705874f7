from __future__ import annotations

import numpy as np

from ..dataset import CLASSIFICATION

PROB_FLOOR = 1e-12


class ModelError(ValueError):
    pass


def softmax(F: np.ndarray) -> np.ndarray:
    F = F - F.max(axis=1, keepdims=True)
    E = np.exp(F)
    return E / E.sum(axis=1, keepdims=True)


def sigmoid(x):
    x = np.asarray(x, dtype=float)
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def one_hot(y: np.ndarray, k: int) -> np.ndarray:
    Y = np.zeros((len(y), k))
    Y[np.arange(len(y)), y] = 1.0
    return Y


class PredictionModel:
    """Fitted prediction function shared by every family.

    Subclasses implement ``_raw(X)`` returning class probabilities of shape
    ``(n, n_classes)`` for classification or predictions of shape ``(n,)``
    for regression.
    """

    family = "base"

    def __init__(self, task: str, n_features: int, n_classes: int | None = None):
        self.task = task
        self.n_features = int(n_features)
        self.n_classes = None if n_classes is None else int(n_classes)

    @property
    def is_classifier(self) -> bool:
        return self.task == CLASSIFICATION

    def _check(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        if X.ndim == 1:
            X = X[None, :]
        if X.ndim != 2 or X.shape[1] != self.n_features:
            raise ModelError(f"{self.family} model fitted on {self.n_features} features, "
                             f"got input of shape {X.shape}")
        return X

    def outputs(self, X) -> np.ndarray:
        """Probability matrix (classification) or real predictions (regression)."""
        return self._raw(self._check(X))

    def predict_proba(self, X) -> np.ndarray:
        if not self.is_classifier:
            raise ModelError("predict_proba is only defined for classification")
        return self.outputs(X)

    def predict(self, X) -> np.ndarray:
        out = self.outputs(X)
        if self.is_classifier:
            # np.argmax returns the first maximum: lowest class index wins ties
            return np.argmax(out, axis=1)
        return out

    def _raw(self, X):
        raise NotImplementedError

    def params(self) -> dict:
        raise NotImplementedError

    def to_dict(self) -> dict:
        return {"family": self.family, "task": self.task, "n_features": self.n_features,
                "n_classes": self.n_classes, "params": self.params()}


def predict(model: PredictionModel, X) -> np.ndarray:
    return model.predict(X)


def predict_proba(model: PredictionModel, X) -> np.ndarray:
    return model.predict_proba(X)
