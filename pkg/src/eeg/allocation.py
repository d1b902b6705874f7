"""Glass-box allocation: desirability ranking, top-q allocators and their
learned and feature-independent estimators.

Every ordering here is a strict total order: ties in score are broken by
ascending observation id. ``n_q`` is ``q * n`` rounded half-to-even, which is
exact on the grid ``{i / n}``.
"""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .dataset import CLASSIFICATION, REGRESSION, Dataset
from .metrics import sufficient_counts
from .models import PROB_FLOOR, GBTModel, HyperparameterGrid, PredictionModel, fit_gbt, grid_search
from .models.base import sigmoid
from .sufficiency import RANK_ORDER, SufficiencyConfig, SufficiencyPartition, partition

log = logging.getLogger(__name__)

FEATURE_DEPENDENT = "feature-dependent"
FEATURE_INDEPENDENT = "feature-independent"
ORACLE = "oracle"
RANDOM_EXPECTATION = "random-expectation"
TAGS = (FEATURE_DEPENDENT, FEATURE_INDEPENDENT, ORACLE, RANDOM_EXPECTATION)

# keeps sigmoid strictly inside (0, 1) so scores never reach a category edge
_SIGMA_CLIP = 1e-15

MEMBERS = ("x", "g", "b", "d_ce", "d_mse")

ABLATION_SETS = (
    ("x",),
    ("g", "b"),
    ("d_ce",),
    ("d_mse",),
    ("x", "d_ce"),
    ("x", "d_mse"),
    ("g", "b", "d_ce"),
    ("g", "b", "d_mse"),
    ("x", "g", "b"),
    ("x", "g", "b", "d_ce"),
    ("x", "g", "b", "d_mse"),
    ("x", "g", "b", "d_ce", "d_mse"),
)
KITCHEN_SINK = ABLATION_SETS[-1]


class AllocationError(ValueError):
    pass


# ---------------------------------------------------------------------------
# desirability ranking

def desirability_score(s_g, s_b, loss_g, loss_b):
    """``2 s_g - s_b - sigmoid(loss_b - loss_g)``; scalar or vectorised."""
    s_g = np.asarray(s_g, dtype=float)
    s_b = np.asarray(s_b, dtype=float)
    diff = np.asarray(loss_b, dtype=float) - np.asarray(loss_g, dtype=float)
    if not np.all(np.isfinite(diff)):
        raise AllocationError("losses must be finite")
    sig = np.clip(sigmoid(np.atleast_1d(diff)), _SIGMA_CLIP, 1.0 - _SIGMA_CLIP).reshape(diff.shape)
    out = 2.0 * s_g - s_b - sig
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True, eq=False)
class DesirabilityRanking:
    ids: np.ndarray
    scores: np.ndarray
    ranks: np.ndarray       # 1..n, ascending in score
    percentile: np.ndarray  # ranks / n

    @property
    def n(self) -> int:
        return len(self.scores)


def _ids_for(n, ids):
    ids = np.arange(n) if ids is None else np.asarray(ids, dtype=np.int64)
    if ids.shape != (n,):
        raise AllocationError("ids must match scores")
    return ids


def ordinal_ranks(scores, ids=None) -> np.ndarray:
    scores = np.asarray(scores, dtype=float)
    ids = _ids_for(len(scores), ids)
    order = np.lexsort((ids, scores))
    ranks = np.empty(len(scores), dtype=np.int64)
    ranks[order] = np.arange(1, len(scores) + 1)
    return ranks


def desirability_percentile(scores, ids=None) -> DesirabilityRanking:
    scores = np.asarray(scores, dtype=float)
    if scores.ndim != 1 or len(scores) < 1:
        raise AllocationError("need at least one score")
    ids = _ids_for(len(scores), ids)
    ranks = ordinal_ranks(scores, ids)
    return DesirabilityRanking(ids, scores, ranks, ranks / len(scores))


def true_scores(part: SufficiencyPartition, loss_g=None, loss_b=None) -> np.ndarray:
    loss_g = part.loss_g if loss_g is None else loss_g
    loss_b = part.loss_b if loss_b is None else loss_b
    if loss_g is None or loss_b is None:
        raise AllocationError("partition carries no losses; pass them explicitly")
    return desirability_score(part.s_g, part.s_b, loss_g, loss_b)


def ranking_from_partition(part: SufficiencyPartition) -> DesirabilityRanking:
    return desirability_percentile(true_scores(part), part.ids)


# ---------------------------------------------------------------------------
# top-q allocation

def n_q(q: float, n: int) -> int:
    if not 0.0 <= q <= 1.0:
        raise AllocationError(f"q must lie in [0, 1], got {q}")
    # pre-rounding absorbs float noise such as 0.3 * 10 = 3.0000000000000004
    return int(round(round(q * n, 9)))


def allocate_top_q(ranking, q: float, ids=None) -> np.ndarray:
    """Glass-box mask selecting the ``n_q`` highest-ranked observations.

    ``ranking`` is a :class:`DesirabilityRanking` or a raw score sequence.
    """
    ranks = ranking.ranks if isinstance(ranking, DesirabilityRanking) else ordinal_ranks(ranking, ids)
    n = len(ranks)
    return ranks > n - n_q(q, n)


def top_q_masks(scores, q_grid: Sequence[float], ids=None) -> np.ndarray:
    """Masks for every grid q, shape ``(len(q_grid), n)``."""
    ranks = ordinal_ranks(scores, ids)
    n = len(ranks)
    cuts = np.array([n - n_q(q, n) for q in q_grid])
    return ranks[None, :] > cuts[:, None]


def oracle_allocation(part: SufficiencyPartition, q: float, losses=None) -> np.ndarray:
    """Top-q mask on the true desirability scores of the evaluated set.

    ``losses`` is an optional ``(loss_g, loss_b)`` pair overriding the
    partition's own losses.
    """
    loss_g, loss_b = losses if losses is not None else (None, None)
    return allocate_top_q(true_scores(part, loss_g, loss_b), q, part.ids)


def random_expectation_curve(part: SufficiencyPartition, q_grid) -> np.ndarray:
    """Closed-form expected ensemble sufficiency of uniform random allocation."""
    q = np.asarray(q_grid, dtype=float)
    return q * part.s_g.mean() + (1.0 - q) * part.s_b.mean()


def random_sampled_curve(part: SufficiencyPartition, q_grid, n_draws: int = 1000,
                         seed: int = 0) -> np.ndarray:
    """Monte-Carlo random allocation: mean over ``n_draws`` uniform permutations.

    Each draw allocates the first ``n_q`` observations of a random permutation
    to the glass box, so its masks are nested across q.
    """
    rng = np.random.default_rng(seed)
    n = part.n
    gain = (part.s_g - part.s_b).astype(float)
    base = float(part.s_b.sum())
    ks = np.array([n_q(q, n) for q in q_grid])
    total = np.zeros(len(ks))
    for _ in range(n_draws):
        csum = np.concatenate([[0.0], np.cumsum(gain[rng.permutation(n)])])
        total += csum[ks]
    return (base + total / n_draws) / n


# ---------------------------------------------------------------------------
# allocator features

def normalize_feature_set(members: Iterable[str] | str) -> tuple[str, ...]:
    if isinstance(members, str):
        members = [m for m in members.replace(" ", "").split(",") if m]
    members = set(members)
    unknown = members - set(MEMBERS)
    if unknown:
        raise AllocationError(f"unknown allocator features {sorted(unknown)}")
    if not members:
        raise AllocationError("allocator feature set is empty")
    return tuple(m for m in MEMBERS if m in members)


def default_feature_set(task: str) -> tuple[str, ...]:
    if task == REGRESSION:
        return ("x", "g", "b", "d_mse")
    return KITCHEN_SINK


def d_ce(g_out, b_out) -> np.ndarray:
    """Cross-entropy of b's class distribution under g's (floored)."""
    G = np.atleast_2d(np.asarray(g_out, dtype=float))
    B = np.atleast_2d(np.asarray(b_out, dtype=float))
    return -np.sum(B * np.log(np.maximum(G, PROB_FLOOR)), axis=1)


def d_mse(g_out, b_out) -> np.ndarray:
    G = np.asarray(g_out, dtype=float)
    B = np.asarray(b_out, dtype=float)
    if G.ndim <= 1:
        return (G - B) ** 2
    return np.mean((G - B) ** 2, axis=1)


def build_allocator_features(X, g_out, b_out, feature_set, task: str) -> np.ndarray:
    """Concatenate the selected members of ``[x, g(x), b(x), d_ce, d_mse]``."""
    members = normalize_feature_set(feature_set)
    if task == REGRESSION and "d_ce" in members:
        raise AllocationError("d_ce is only defined for classification outputs")
    X = np.atleast_2d(np.asarray(X, dtype=float))
    G = np.asarray(g_out, dtype=float).reshape(X.shape[0], -1)
    B = np.asarray(b_out, dtype=float).reshape(X.shape[0], -1)
    cols = []
    for m in members:
        if m == "x":
            cols.append(X)
        elif m == "g":
            cols.append(G)
        elif m == "b":
            cols.append(B)
        elif m == "d_ce":
            cols.append(d_ce(G, B)[:, None])
        else:
            cols.append(d_mse(G, B).reshape(-1, 1))
    return np.column_stack(cols)


def feature_independent_scores(g_outs, b_outs, task: str) -> np.ndarray:
    """Prediction disagreement: higher means allocate to the glass box sooner."""
    if task == CLASSIFICATION:
        return d_ce(g_outs, b_outs)
    return d_mse(g_outs, b_outs)


# ---------------------------------------------------------------------------
# learned allocator

@dataclass
class LearnedAllocator:
    model: GBTModel
    feature_set: tuple[str, ...]
    task: str
    train_counts: dict
    tuning: dict | None = None

    def features(self, X, g_out, b_out) -> np.ndarray:
        return build_allocator_features(X, g_out, b_out, self.feature_set, self.task)

    def predict(self, X, g_out, b_out) -> np.ndarray:
        """Estimated desirability percentile of each row."""
        return self.model.predict(self.features(X, g_out, b_out))

    def to_dict(self) -> dict:
        return {"feature_set": list(self.feature_set), "task": self.task,
                "train_counts": self.train_counts, "tuning": self.tuning,
                "model": self.model.to_dict()}

    @classmethod
    def from_dict(cls, d: dict) -> "LearnedAllocator":
        from .models import model_from_dict
        return cls(model_from_dict(d["model"]), tuple(d["feature_set"]), d["task"],
                   d["train_counts"], d.get("tuning"))


DEFAULT_ALLOCATOR_PARAMS = {"learning_rate": 0.1, "n_estimators": 128, "max_depth": 3,
                            "subsample": 1.0}


def train_learned_allocator(train: Dataset, g: PredictionModel, b: PredictionModel,
                            config: SufficiencyConfig, feature_set=None,
                            gbt_params=None, seed: int = 0, folds: int = 4) -> LearnedAllocator:
    """Fit a GBT regressor from allocator features to the training percentile.

    ``gbt_params`` is either one parameter point (scalars) or a grid (lists),
    in which case it is tuned by k-fold grid search.
    """
    feature_set = normalize_feature_set(feature_set or default_feature_set(train.task))
    part = partition(g, b, train, config)
    ranking = ranking_from_partition(part)
    Z = build_allocator_features(train.X, g.outputs(train.X), b.outputs(train.X),
                                 feature_set, train.task)
    alloc_data = Dataset(Z, ranking.percentile, REGRESSION, ids=train.ids)
    params = dict(DEFAULT_ALLOCATOR_PARAMS if gbt_params is None else gbt_params)
    tuning = None
    if any(isinstance(v, (list, tuple)) for v in params.values()):
        grid = HyperparameterGrid("gbt", {k: list(v) if isinstance(v, (list, tuple)) else [v]
                                          for k, v in params.items()})
        if alloc_data.n >= folds:
            report = grid_search("gbt", grid, alloc_data, folds, seed)
            model, tuning = report.model, report.to_dict()
        else:
            model = fit_gbt(alloc_data, **grid.points()[0], seed=seed)
    else:
        model = fit_gbt(alloc_data, **params, seed=seed)
    return LearnedAllocator(model, feature_set, train.task, part.counts, tuning)


# ---------------------------------------------------------------------------
# allocator ensembling and category estimation

def ensemble_allocators(learned_scores, independent_scores, validation: SufficiencyPartition,
                        q_grid) -> list[str]:
    """Per grid q, the allocator whose mask has higher validation sufficiency.

    Ties go to the feature-independent allocator.
    """
    ids = validation.ids
    dep = top_q_masks(learned_scores, q_grid, ids)
    ind = top_q_masks(independent_scores, q_grid, ids)
    tags = []
    for m_dep, m_ind in zip(dep, ind):
        better = (sufficient_counts(m_dep, validation.s_g, validation.s_b)
                  > sufficient_counts(m_ind, validation.s_g, validation.s_b))
        tags.append(FEATURE_DEPENDENT if better else FEATURE_INDEPENDENT)
    return tags


def category_thresholds(counts: dict) -> tuple[float, float, float]:
    n = sum(counts[c] for c in RANK_ORDER)
    if n == 0:
        raise AllocationError("all category counts are zero")
    c_b = counts["Zb"] / n
    c_0 = (counts["Zb"] + counts["Z0"]) / n
    c_2 = (counts["Zb"] + counts["Z0"] + counts["Z2"]) / n
    return c_b, c_0, c_2


def estimate_sufficiency_category(predicted_percentile, counts: dict):
    """Map percentiles to categories by cumulative training proportions.

    ``counts`` maps ``Zb``/``Z0``/``Z2``/``Zg`` to training counts.
    """
    c_b, c_0, c_2 = category_thresholds(counts)
    p = np.asarray(predicted_percentile, dtype=float)
    out = np.where(p <= c_b, "Zb", np.where(p <= c_0, "Z0", np.where(p <= c_2, "Z2", "Zg")))
    return str(out) if out.ndim == 0 else out.astype(object)


@dataclass(frozen=True, eq=False)
class AllocationPolicy:
    """Glass-box masks over an evaluation set for each grid q."""

    q_grid: np.ndarray
    masks: np.ndarray       # (len(q_grid), n) bool
    tags: tuple[str, ...]
    ids: np.ndarray

    def __post_init__(self):
        masks = np.asarray(self.masks, dtype=bool)
        q = np.asarray(self.q_grid, dtype=float)
        if masks.shape != (len(q), len(self.ids)) or len(self.tags) != len(q):
            raise AllocationError("policy shape mismatch")
        object.__setattr__(self, "masks", masks)
        object.__setattr__(self, "q_grid", q)
        object.__setattr__(self, "tags", tuple(self.tags))

    def to_csv(self, path, predicted_percentile=None, estimated_category=None) -> None:
        n = len(self.ids)
        pct = np.full(n, np.nan) if predicted_percentile is None else predicted_percentile
        cat = [""] * n if estimated_category is None else estimated_category
        with Path(path).open("w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["id", "q", "assigned_model", "allocator_tag",
                        "predicted_percentile", "estimated_category"])
            for q, mask, tag in zip(self.q_grid, self.masks, self.tags):
                for i in range(n):
                    w.writerow([int(self.ids[i]), repr(float(q)), "g" if mask[i] else "b", tag,
                                repr(float(pct[i])), cat[i]])


def policy_from_scores(scores, q_grid, ids, tag: str) -> AllocationPolicy:
    return AllocationPolicy(q_grid, top_q_masks(scores, q_grid, ids), (tag,) * len(q_grid), ids)


def ensembled_policy(learned_scores, independent_scores, tags, q_grid, ids) -> AllocationPolicy:
    dep = top_q_masks(learned_scores, q_grid, ids)
    ind = top_q_masks(independent_scores, q_grid, ids)
    masks = np.array([d if t == FEATURE_DEPENDENT else i for d, i, t in zip(dep, ind, tags)])
    return AllocationPolicy(q_grid, masks, tags, ids)
