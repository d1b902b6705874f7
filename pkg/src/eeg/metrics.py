"""Explainability/performance curves and their scalar summaries.

"Performance" throughout is ensemble sufficiency: the fraction of
observations whose assigned model is sufficient for them. Curve values are
integer counts divided by ``n`` so endpoint and "at least max" comparisons
are exact.
"""

from __future__ import annotations

import csv
import math
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

DEFAULT_GRID_POINTS = 41
REPORT_COLUMNS = ("auc", "ppcr", "pqeom", "pqom", "pcfa", "tqm95", "max_acc", "argmax_q", "s_acc")
REPORT_HEADERS = ("AUC", "PPCR", "PQEOM", "PQOM", "PCFA", "95TQM", "Max Acc", "Argmax q", "s Acc")


class MetricsError(ValueError):
    pass


def default_q_grid(points: int = DEFAULT_GRID_POINTS) -> np.ndarray:
    return np.round(np.linspace(0.0, 1.0, points), 12)


def validate_q_grid(q_grid) -> np.ndarray:
    q = np.asarray(q_grid, dtype=float)
    if q.ndim != 1 or len(q) < 2:
        raise MetricsError("q grid needs at least two points")
    if np.any(np.diff(q) <= 0):
        raise MetricsError("q grid must be strictly increasing")
    if q[0] != 0.0 or q[-1] != 1.0:
        raise MetricsError("q grid must start at 0 and end at 1")
    return q


def sufficient_counts(mask, s_g, s_b) -> int:
    """Number of observations whose allocated model is sufficient."""
    mask = np.asarray(mask, dtype=bool)
    return int(np.sum(np.where(mask, s_g, s_b)))


@dataclass(frozen=True, eq=False)
class PerformanceCurve:
    q_grid: np.ndarray
    t_bar: np.ndarray
    t_bar_g: np.ndarray
    tags: tuple[str, ...]

    def to_rows(self):
        return [(float(q), float(t), float(tg), tag)
                for q, t, tg, tag in zip(self.q_grid, self.t_bar, self.t_bar_g, self.tags)]

    def to_csv(self, path) -> None:
        with Path(path).open("w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["q", "t_bar", "t_bar_g", "allocator_tag"])
            for q, t, tg, tag in self.to_rows():
                w.writerow([repr(q), repr(t), repr(tg), tag])


def curve(policy, part) -> PerformanceCurve:
    """Ensemble and glass-box sufficiency of ``policy`` on ``part``'s observations."""
    if len(policy.ids) != part.n or not np.array_equal(policy.ids, part.ids):
        raise MetricsError("policy and partition cover different observations")
    n = part.n
    masks = np.asarray(policy.masks, dtype=bool)
    t_bar = np.where(masks, part.s_g[None, :], part.s_b[None, :]).sum(axis=1) / n
    t_bar_g = (masks * part.s_g[None, :]).sum(axis=1) / n
    return PerformanceCurve(np.asarray(policy.q_grid, dtype=float), t_bar, t_bar_g,
                            tuple(policy.tags))


def _values(c):
    return np.asarray(c.t_bar if isinstance(c, PerformanceCurve) else c, dtype=float)


def _grid(c, q_grid):
    return np.asarray(c.q_grid if isinstance(c, PerformanceCurve) else q_grid, dtype=float)


def auc(c, q_grid=None) -> float:
    """Trapezoidal area under the curve over the q grid."""
    y = _values(c)
    q = _grid(c, q_grid)
    if len(q) < 2:
        raise MetricsError("AUC needs at least two grid points")
    return float(np.sum((q[1:] - q[:-1]) * (y[1:] + y[:-1]) / 2.0))


def ppcr(learned_auc: float, random_auc: float, oracle_auc: float) -> float | None:
    """Share of the oracle's AUC gain over random that the allocator captures.

    Returns ``None`` when oracle and random AUC coincide.
    """
    denom = oracle_auc - random_auc
    if abs(denom) < 1e-12:
        return None
    return (learned_auc - random_auc) / denom


def pqeom(c, perf_g: float, perf_b: float) -> float:
    y = _values(c)
    return float(np.mean(y >= max(perf_g, perf_b)))


def pqom(c, perf_g: float, perf_b: float) -> float:
    y = _values(c)
    return float(np.mean(y > max(perf_g, perf_b)))


def pcfa(tags) -> float:
    from .allocation import FEATURE_DEPENDENT
    tags = list(tags)
    if not tags:
        raise MetricsError("empty selection map")
    return sum(t == FEATURE_DEPENDENT for t in tags) / len(tags)


def tqm95(c, perf_g: float, perf_b: float, q_grid=None) -> float:
    y = _values(c)
    q = _grid(c, q_grid)
    ok = y >= 0.95 * max(perf_g, perf_b)
    return float(q[ok].max()) if ok.any() else 0.0


def max_acc_argmax(c, q_grid=None) -> tuple[float, float]:
    y = _values(c)
    q = _grid(c, q_grid)
    best = float(y.max())
    return best, float(q[y >= best - 1e-12].max())


def s_acc(estimated, true) -> float:
    est = np.asarray(estimated, dtype=object)
    tru = np.asarray(true, dtype=object)
    if est.shape != tru.shape:
        raise MetricsError("estimated and true categories differ in length")
    if est.size == 0:
        raise MetricsError("no categories to compare")
    return float(np.mean(est == tru))


@dataclass(frozen=True)
class MetricsReport:
    auc: float
    ppcr: float | None
    pqeom: float
    pqom: float
    pcfa: float
    tqm95: float
    max_acc: float
    argmax_q: float
    s_acc: float

    def to_dict(self) -> dict:
        return asdict(self)

    def table_row(self, scale: float = 100.0) -> dict:
        out = {}
        for key, head in zip(REPORT_COLUMNS, REPORT_HEADERS):
            v = getattr(self, key)
            out[head] = None if v is None else v * scale
        return out


def metrics_report(ensemble: PerformanceCurve, oracle: PerformanceCurve, random_values,
                   perf_g: float, perf_b: float, tags, s_accuracy: float) -> MetricsReport:
    a = auc(ensemble)
    mx, am = max_acc_argmax(ensemble)
    return MetricsReport(
        auc=a,
        ppcr=ppcr(a, auc(random_values, ensemble.q_grid), auc(oracle)),
        pqeom=pqeom(ensemble, perf_g, perf_b),
        pqom=pqom(ensemble, perf_g, perf_b),
        pcfa=pcfa(tags),
        tqm95=tqm95(ensemble, perf_g, perf_b),
        max_acc=mx,
        argmax_q=am,
        s_acc=s_accuracy,
    )


def mean_sd(values) -> tuple[float | None, float | None]:
    """Mean and sample standard deviation (0 for a single value), skipping None."""
    vals = [v for v in values if v is not None and not (isinstance(v, float) and math.isnan(v))]
    if not vals:
        return None, None
    arr = np.asarray(vals, dtype=float)
    sd = float(arr.std(ddof=1)) if len(arr) > 1 else 0.0
    return float(arr.mean()), sd
