"""Exhaustive checks of the top-q allocator's optimality guarantees.

The oracle here enumerates every glass-box subset of a small instance
(``n <= 12``, so at most 4096 subsets) and never calls the ranking code it
checks.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from .allocation import (allocate_top_q, desirability_score, n_q, ordinal_ranks,
                         top_q_masks)
from .metrics import default_q_grid


@dataclass
class CheckResult:
    name: str
    passed: bool
    cases: int
    detail: str = ""
    seconds: float = 0.0

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        extra = f" - {self.detail}" if self.detail else ""
        return f"{status} {self.name} ({self.cases} cases, {self.seconds:.2f}s){extra}"


def all_subsets(n: int) -> np.ndarray:
    """Every subset of ``range(n)`` as a boolean matrix, shape ``(2**n, n)``."""
    codes = np.arange(2 ** n)[:, None]
    return ((codes >> np.arange(n)[None, :]) & 1).astype(bool)


def brute_force_optimum(s_g, s_b, k: int, subsets=None):
    """(best ensemble count, best glass-box count among ensemble maximisers)
    over all glass-box subsets of size ``k``."""
    s_g = np.asarray(s_g)
    s_b = np.asarray(s_b)
    n = len(s_g)
    subsets = all_subsets(n) if subsets is None else subsets
    sized = subsets[subsets.sum(axis=1) == k]
    ens = np.where(sized, s_g, s_b).sum(axis=1)
    glass = (sized * s_g).sum(axis=1)
    best = ens.max()
    return int(best), int(glass[ens == best].max())


def random_instance(rng: np.random.Generator, n: int):
    """Random sufficiency pairs and losses; losses sometimes drawn from a
    small integer set so that ties occur."""
    weights = rng.dirichlet(np.ones(4))
    cat = rng.choice(4, size=n, p=weights)
    s_g = np.isin(cat, (0, 2)).astype(int)
    s_b = np.isin(cat, (1, 2)).astype(int)
    if rng.random() < 0.3:
        loss_g = rng.integers(0, 3, n).astype(float)
        loss_b = rng.integers(0, 3, n).astype(float)
    else:
        loss_g = rng.exponential(1.0, n)
        loss_b = rng.exponential(1.0, n)
    return s_g, s_b, loss_g, loss_b


def check_optimality(instances: int = 200, seed: int = 0, n_range=(6, 12)):
    """Maximal sufficient performance and maximal explainable performance
    of the top-q allocator, against exhaustive enumeration."""
    rng = np.random.default_rng(seed)
    subsets = {n: all_subsets(n) for n in range(n_range[0], n_range[1] + 1)}
    fails1, fails2, checked = [], [], 0
    t0 = time.perf_counter()
    for inst in range(instances):
        n = int(rng.integers(n_range[0], n_range[1] + 1))
        s_g, s_b, loss_g, loss_b = random_instance(rng, n)
        scores = desirability_score(s_g, s_b, loss_g, loss_b)
        for i in range(n + 1):
            q = i / n
            mask = allocate_top_q(scores, q)
            k = n_q(q, n)
            best, best_g = brute_force_optimum(s_g, s_b, k, subsets[n])
            ens = int(np.where(mask, s_g, s_b).sum())
            glass = int((mask * s_g).sum())
            checked += 1
            if mask.sum() != k or ens != best:
                fails1.append((inst, n, i))
            elif glass != best_g:
                fails2.append((inst, n, i))
    dt = time.perf_counter() - t0
    return (
        CheckResult("maximal sufficient performance", not fails1, checked,
                    f"{len(fails1)} failures {fails1[:3]}" if fails1 else f"{instances} instances", dt),
        CheckResult("maximal sufficient explainable performance", not fails2, checked,
                    f"{len(fails2)} failures {fails2[:3]}" if fails2 else "", dt),
    )


def check_monotone(sequences: int = 100, seed: int = 1, q_grid=None) -> CheckResult:
    """Glass-box masks are nested as q increases."""
    rng = np.random.default_rng(seed)
    q_grid = default_q_grid() if q_grid is None else np.asarray(q_grid)
    t0 = time.perf_counter()
    bad = 0
    for _ in range(sequences):
        n = int(rng.integers(1, 400))
        scores = rng.normal(size=n)
        if rng.random() < 0.3:
            scores = np.round(scores, 1)  # force ties
        masks = top_q_masks(scores, q_grid)
        if np.any(masks[:-1] & ~masks[1:]):
            bad += 1
    return CheckResult("monotone allocation", bad == 0, sequences,
                       f"{bad} non-nested sequences" if bad else "", time.perf_counter() - t0)


CATEGORY_INTERVALS = {(0, 1): (-2.0, -1.0), (0, 0): (-1.0, 0.0), (1, 1): (0.0, 1.0), (1, 0): (1.0, 2.0)}


def check_category_intervals(tuples: int = 10_000, seed: int = 2) -> CheckResult:
    """Raw scores fall strictly inside their category's unit interval."""
    rng = np.random.default_rng(seed)
    t0 = time.perf_counter()
    s_g = rng.integers(0, 2, tuples)
    s_b = rng.integers(0, 2, tuples)
    loss_g = rng.exponential(2.0, tuples)
    loss_b = rng.exponential(2.0, tuples)
    r = desirability_score(s_g, s_b, loss_g, loss_b)
    bad = 0
    for (a, b_), (lo, hi) in CATEGORY_INTERVALS.items():
        sel = (s_g == a) & (s_b == b_)
        bad += int(np.sum(~((r[sel] > lo) & (r[sel] < hi))))
    return CheckResult("category score intervals", bad == 0, tuples,
                       f"{bad} out of interval" if bad else "", time.perf_counter() - t0)


def check_cardinality(instances: int = 200, seed: int = 3) -> CheckResult:
    rng = np.random.default_rng(seed)
    t0 = time.perf_counter()
    bad = cases = 0
    for _ in range(instances):
        n = int(rng.integers(1, 60))
        scores = rng.normal(size=n)
        for i in range(n + 1):
            cases += 1
            bad += int(allocate_top_q(scores, i / n).sum() != i)
    return CheckResult("mask cardinality on the i/n grid", bad == 0, cases,
                       f"{bad} wrong sizes" if bad else "", time.perf_counter() - t0)


def check_reduction(instances: int = 1000, seed: int = 4) -> CheckResult:
    """With every model always sufficient, the ranking orders observations
    purely by loss difference: highest priority first means ascending
    ``loss_b - loss_g``; equal differences fall back to the id tie-break."""
    rng = np.random.default_rng(seed)
    t0 = time.perf_counter()
    bad = 0
    for _ in range(instances):
        n = int(rng.integers(2, 50))
        loss_g = rng.uniform(0, 5, n)
        loss_b = rng.uniform(0, 5, n)
        if rng.random() < 0.3:
            loss_g = np.round(loss_g)
            loss_b = np.round(loss_b)
        ids = rng.permutation(n) + 100
        ones = np.ones(n, dtype=int)
        ranks = ordinal_ranks(desirability_score(ones, ones, loss_g, loss_b), ids)
        diff = loss_b - loss_g
        # independent order: python sort on (-diff, id) gives ascending rank
        expected_order = sorted(range(n), key=lambda i: (-diff[i], ids[i]))
        expected = np.empty(n, dtype=int)
        expected[expected_order] = np.arange(1, n + 1)
        bad += int(not np.array_equal(ranks, expected))
    return CheckResult("always-sufficient reduction to loss ordering", bad == 0, instances,
                       f"{bad} mismatching instances" if bad else "", time.perf_counter() - t0)


def run_all(seed: int = 0) -> list[CheckResult]:
    p1, p2 = check_optimality(200, seed)
    return [p1, p2, check_monotone(100, seed + 1), check_category_intervals(10_000, seed + 2),
            check_cardinality(200, seed + 3), check_reduction(1000, seed + 4)]
