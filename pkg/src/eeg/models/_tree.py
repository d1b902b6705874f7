"""Axis-aligned binary tree growth shared by CART and gradient boosting.

Split quality is the weighted sum-of-squares criterion

    sum_k S_L[k]^2 / n_L + sum_k S_R[k]^2 / n_R

over target columns ``Y``. With ``Y`` one-hot this is the Gini decrease (up
to the parent constant); with a single real column it is the variance
(squared-error) decrease.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass

import numpy as np

LEAF = -1


@dataclass(frozen=True, eq=False)
class Tree:
    feature: np.ndarray    # int, LEAF for leaves
    threshold: np.ndarray  # go left when x[feature] <= threshold
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray      # (n_nodes, n_outputs)
    n_samples: np.ndarray

    @property
    def n_nodes(self) -> int:
        return len(self.feature)

    @property
    def n_leaves(self) -> int:
        return int(np.sum(self.feature == LEAF))

    def depth(self) -> int:
        best, stack = 0, [(0, 0)]
        while stack:
            node, d = stack.pop()
            if self.feature[node] == LEAF:
                best = max(best, d)
            else:
                stack.append((self.left[node], d + 1))
                stack.append((self.right[node], d + 1))
        return best

    def apply(self, X: np.ndarray) -> np.ndarray:
        """Leaf index reached by each row."""
        node = np.zeros(X.shape[0], dtype=np.int64)
        active = np.flatnonzero(self.feature[node] != LEAF)
        while active.size:
            cur = node[active]
            go_left = X[active, self.feature[cur]] <= self.threshold[cur]
            node[active] = np.where(go_left, self.left[cur], self.right[cur])
            active = active[self.feature[node[active]] != LEAF]
        return node

    def predict(self, X: np.ndarray) -> np.ndarray:
        return self.value[self.apply(X)]

    def scaled(self, factor: float) -> "Tree":
        return Tree(self.feature, self.threshold, self.left, self.right,
                    self.value * factor, self.n_samples)

    def with_values(self, value: np.ndarray) -> "Tree":
        return Tree(self.feature, self.threshold, self.left, self.right,
                    np.asarray(value, dtype=float), self.n_samples)

    def to_dict(self) -> dict:
        return {
            "feature": self.feature.tolist(),
            "threshold": [float(t) for t in self.threshold],
            "left": self.left.tolist(),
            "right": self.right.tolist(),
            "value": [[float(v) for v in row] for row in self.value],
            "n_samples": self.n_samples.tolist(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Tree":
        return cls(np.array(d["feature"], dtype=np.int64),
                   np.array(d["threshold"], dtype=float),
                   np.array(d["left"], dtype=np.int64),
                   np.array(d["right"], dtype=np.int64),
                   np.array(d["value"], dtype=float).reshape(len(d["feature"]), -1),
                   np.array(d["n_samples"], dtype=np.int64))


def _best_split(X, Y, rows, min_leaf):
    """Return (gain, feature, threshold, left_rows, right_rows) or None."""
    m = rows.size
    if m < 2 * min_leaf or m < 2:
        return None
    Xn = X[rows]
    order = np.argsort(Xn, axis=0, kind="stable")
    Xs = np.take_along_axis(Xn, order, axis=0)
    Ys = Y[rows][order]                      # (m, d, k)
    cs = np.cumsum(Ys, axis=0)
    total = cs[-1]
    left = cs[:-1]
    right = total - left
    n_left = np.arange(1, m, dtype=float)[:, None]
    score = (left ** 2).sum(-1) / n_left + (right ** 2).sum(-1) / (m - n_left)
    valid = Xs[1:] > Xs[:-1]
    valid[: min_leaf - 1] = False
    if min_leaf > 1:
        valid[m - min_leaf:] = False
    if not valid.any():
        return None
    score = np.where(valid, score, -np.inf)
    # feature-major flattening: lowest feature index wins exact ties
    flat = int(np.argmax(score.T))
    j, pos = divmod(flat, m - 1)
    parent = (total[j] ** 2).sum() / m
    gain = score[pos, j] - parent
    if not gain > 1e-12 * max(1.0, abs(parent)):
        return None
    lo, hi = Xs[pos, j], Xs[pos + 1, j]
    threshold = lo + (hi - lo) / 2.0
    if not threshold < hi:
        threshold = lo
    go_left = Xn[:, j] <= threshold
    return gain, j, float(threshold), rows[go_left], rows[~go_left]


def grow_tree(X: np.ndarray, Y: np.ndarray, *, max_depth: int | None = None,
              max_leaf: int | None = None, min_split: int = 2,
              min_leaf: int = 1, leaf_value=None) -> Tree:
    """Grow a tree on targets ``Y`` (shape ``(n, k)``).

    Leaves are expanded best-first by gain, so ``max_leaf`` keeps the most
    useful splits. ``leaf_value(rows)`` computes leaf outputs; the default is
    the column means of ``Y``.
    """
    X = np.asarray(X, dtype=float)
    Y = np.asarray(Y, dtype=float)
    if Y.ndim == 1:
        Y = Y[:, None]
    n = X.shape[0]
    max_depth = math.inf if max_depth is None else max_depth
    max_leaf = math.inf if max_leaf is None else max_leaf
    min_leaf = max(1, int(min_leaf))
    if leaf_value is None:
        def leaf_value(rows):
            return Y[rows].mean(axis=0)

    feature, threshold, left, right, nodes_rows, depths = [], [], [], [], [], []

    def new_node(rows, depth):
        feature.append(LEAF)
        threshold.append(0.0)
        left.append(LEAF)
        right.append(LEAF)
        nodes_rows.append(rows)
        depths.append(depth)
        return len(feature) - 1

    heap = []

    def push(node):
        rows = nodes_rows[node]
        if depths[node] >= max_depth or rows.size < min_split:
            return
        found = _best_split(X, Y, rows, min_leaf)
        if found is not None:
            heapq.heappush(heap, (-found[0], node, found))

    push(new_node(np.arange(n), 0))
    n_leaves = 1
    while heap and n_leaves < max_leaf:
        _, node, (_, j, thr, lrows, rrows) = heapq.heappop(heap)
        feature[node] = j
        threshold[node] = thr
        left[node] = new_node(lrows, depths[node] + 1)
        right[node] = new_node(rrows, depths[node] + 1)
        n_leaves += 1
        push(left[node])
        push(right[node])

    value = np.array([leaf_value(rows) for rows in nodes_rows], dtype=float).reshape(len(feature), -1)
    return Tree(np.array(feature, dtype=np.int64), np.array(threshold, dtype=float),
                np.array(left, dtype=np.int64), np.array(right, dtype=np.int64), value,
                np.array([r.size for r in nodes_rows], dtype=np.int64))
