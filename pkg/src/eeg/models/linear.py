"""L1-penalised linear and logistic regression by accelerated proximal gradient.

The objective is ``mean loss + l1_penalty * ||W||_1`` with the intercept left
unpenalised. Loss is squared error for regression, binary log-loss (one
logit) for two classes and multinomial log-loss otherwise.

Iteration uses monotone FISTA with a fixed step ``1/L``, where ``L`` bounds
the Lipschitz constant of the smooth part. It stops when the relative
objective change drops below ``tol`` *and* the proximal gradient mapping has
norm below ``grad_tol``, or after ``max_iter`` iterations.
"""

from __future__ import annotations

import numpy as np
from scipy.special import logsumexp

from ..dataset import CLASSIFICATION, Dataset
from .base import ModelError, PredictionModel, one_hot, sigmoid, softmax

TOL = 1e-7
GRAD_TOL = 1e-7
MAX_ITER = 10_000


class LinearModel(PredictionModel):
    family = "linear"

    def __init__(self, task, n_features, n_classes, coef, intercept, l1_penalty,
                 n_iter=0, converged=True):
        super().__init__(task, n_features, n_classes)
        self.coef = np.asarray(coef, dtype=float).reshape(n_features, -1)
        self.intercept = np.asarray(intercept, dtype=float).reshape(-1)
        self.l1_penalty = float(l1_penalty)
        self.n_iter = int(n_iter)
        self.converged = bool(converged)

    def decision_function(self, X) -> np.ndarray:
        return self._check(X) @ self.coef + self.intercept

    def _raw(self, X):
        Z = X @ self.coef + self.intercept
        if not self.is_classifier:
            return Z[:, 0]
        if Z.shape[1] == 1:
            p = sigmoid(Z[:, 0])
            return np.column_stack([1.0 - p, p])
        return softmax(Z)

    def params(self):
        return {"l1_penalty": self.l1_penalty,
                "coef": self.coef.tolist(), "intercept": self.intercept.tolist(),
                "n_iter": self.n_iter, "converged": self.converged}

    @classmethod
    def from_params(cls, task, n_features, n_classes, p):
        return cls(task, n_features, n_classes, p["coef"], p["intercept"], p["l1_penalty"],
                   p.get("n_iter", 0), p.get("converged", True))


def _smooth_loss(task, n_classes):
    """Return (value_and_grad(Z) -> (f, dZ), lipschitz_factor) for logits Z."""
    if task != CLASSIFICATION:
        def fn(Z, y):
            r = Z[:, 0] - y
            return np.mean(r * r), (2.0 / len(y)) * r[:, None]
        return fn, 2.0
    if n_classes <= 2:
        def fn(Z, y):
            z = Z[:, 0]
            f = np.mean(np.logaddexp(0.0, z) - y * z)
            return f, ((sigmoid(z) - y) / len(y))[:, None]
        return fn, 0.25

    def fn(Z, Y):
        f = np.mean(logsumexp(Z, axis=1) - np.sum(Z * Y, axis=1))
        return f, (softmax(Z) - Y) / Z.shape[0]
    return fn, 0.5


def fit_linear(train: Dataset, l1_penalty: float = 0.0, task: str | None = None, *,
               tol: float = TOL, grad_tol: float = GRAD_TOL, max_iter: int = MAX_ITER) -> LinearModel:
    task = task or train.task
    if l1_penalty < 0:
        raise ModelError(f"l1_penalty must be non-negative, got {l1_penalty}")
    X = train.X
    n, d = X.shape
    k = train.n_classes if task == CLASSIFICATION else 1
    m = 1 if (task != CLASSIFICATION or k <= 2) else k
    target = train.y.astype(float) if m == 1 else one_hot(train.y, k)
    loss, factor = _smooth_loss(task, k)

    Xa = np.column_stack([X, np.ones(n)])
    spectral = np.linalg.eigvalsh(Xa.T @ Xa / n)[-1]
    L = max(factor * spectral, 1e-12)
    thresh = l1_penalty / L

    def objective(theta):
        f, _ = loss(Xa @ theta, target)
        return f + l1_penalty * np.abs(theta[:-1]).sum()

    def grad(theta):
        f, dZ = loss(Xa @ theta, target)
        return Xa.T @ dZ

    def prox(theta):
        out = theta.copy()
        w = out[:-1]
        out[:-1] = np.sign(w) * np.maximum(np.abs(w) - thresh, 0.0)
        return out

    x = np.zeros((d + 1, m))
    if m == 1 and task != CLASSIFICATION:
        x[-1, 0] = target.mean()
    fx = objective(x)
    if not np.isfinite(fx):
        raise ModelError("non-finite objective at start; check feature scaling")
    y_pt, t = x.copy(), 1.0
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        z = prox(y_pt - grad(y_pt) / L)
        fz = objective(z)
        if not np.isfinite(fz):
            raise ModelError(f"non-finite objective at iteration {it}; check feature scaling")
        x_new, f_new = (z, fz) if fz <= fx else (x, fx)
        t_new = (1.0 + np.sqrt(1.0 + 4.0 * t * t)) / 2.0
        y_pt = x_new + (t / t_new) * (z - x_new) + ((t - 1.0) / t_new) * (x_new - x)
        rel = abs(fx - f_new) / max(abs(fx), 1e-300)
        if fz > fx:
            # momentum overshot; restart from the incumbent
            y_pt, t_new = x_new.copy(), 1.0
        x, fx, t = x_new, f_new, t_new
        if rel < tol:
            mapping = L * (x - prox(x - grad(x) / L))
            if np.linalg.norm(mapping) < grad_tol:
                converged = True
                break
    return LinearModel(task, d, train.n_classes, x[:-1], x[-1], l1_penalty, it, converged)
