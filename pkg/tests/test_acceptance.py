"""Acceptance criteria 1-10, one PASS/FAIL line each (see the terminal summary)."""

import time

import numpy as np
import pytest

from eeg import allocation as al
from eeg.config import ExperimentConfig, from_dict
from eeg.dataset import gen_complementary_2d
from eeg.experiment import replicate, run_experiment
from eeg.metrics import REPORT_COLUMNS, auc, curve, default_q_grid, ppcr
from eeg.models import fit_gbt, fit_linear
from eeg.sufficiency import (ALWAYS, CLASSIFICATION_EQUALITY, SufficiencyConfig,
                             SufficiencyPartition, partition, sufficiency_from)
from eeg.verify import check_category_intervals, check_monotone, check_optimality

from conftest import record


# ------------------------------------------------------------ criteria 1-4

@pytest.fixture(scope="module")
def optimality():
    t0 = time.perf_counter()
    p1, p2 = check_optimality(instances=200, seed=0, n_range=(6, 12))
    return p1, p2, time.perf_counter() - t0


def test_criterion_01_sufficiency_optimal(optimality):
    p1, _, seconds = optimality
    ok = p1.passed and p1.cases > 0 and seconds < 60
    record(1, ok, f"{p1.cases} (instance, q) cases vs brute force, {seconds:.1f}s; {p1.detail}")
    assert ok


def test_criterion_02_explainable_optimal(optimality):
    _, p2, _ = optimality
    record(2, p2.passed, f"{p2.cases} cases, max glass-box sufficiency among maximisers")
    assert p2.passed


def test_criterion_03_nested_masks():
    r = check_monotone(sequences=100, seed=1, q_grid=default_q_grid())
    record(3, r.passed, f"{r.cases} score sequences on the 41-point grid; {r.detail or 'all nested'}")
    assert r.passed


def test_criterion_04_category_intervals():
    r = check_category_intervals(tuples=10_000, seed=2)
    record(4, r.passed, f"{r.cases} tuples; {r.detail or 'all strictly inside'}")
    assert r.passed


# ------------------------------------------------------------ criteria 5-6

@pytest.fixture(scope="module")
def eval_partition():
    """Test partition of 1,000 seeded synthetic observations under real models."""
    train = gen_complementary_2d(2000, seed=8)
    test = gen_complementary_2d(1000, seed=7)
    g = fit_linear(train, 0.01)
    b = fit_gbt(train, 0.1, 64, 3, 1.0, seed=0)
    return partition(g, b, test, SufficiencyConfig(CLASSIFICATION_EQUALITY))


def test_criterion_05_ppcr_endpoints(eval_partition):
    part, q = eval_partition, default_q_grid()
    oracle = curve(al.policy_from_scores(al.true_scores(part), q, part.ids, al.ORACLE), part)
    a_oracle = auc(oracle)
    rand = al.random_expectation_curve(part, q)
    a_rand = auc(rand, q)
    sampled = al.random_sampled_curve(part, q, n_draws=1000, seed=0)
    p_oracle = ppcr(a_oracle, a_rand, a_oracle)
    p_rand = ppcr(a_rand, a_rand, a_oracle)
    p_sampled = ppcr(auc(sampled, q), a_rand, a_oracle)
    ok = p_oracle == 1.0 and p_rand == 0.0 and abs(p_sampled) <= 0.02
    record(5, ok, f"PPCR oracle={p_oracle!r}, random expectation={p_rand!r}, "
                  f"sampled random={p_sampled:+.4f} (n={part.n}, counts {part.counts})")
    assert ok


def test_criterion_06_random_closed_form(eval_partition):
    part, q = eval_partition, default_q_grid()
    sampled = al.random_sampled_curve(part, q, n_draws=10_000, seed=1)
    closed = q * part.s_g.mean() + (1 - q) * part.s_b.mean()
    err = float(np.max(np.abs(sampled - closed)))
    record(6, err <= 0.01, f"10,000 draws, max |sampled - closed form| = {err:.5f} over 41 q")
    assert err <= 0.01


# --------------------------------------------------------- criteria 7, 10

@pytest.fixture(scope="module")
def default_run(tmp_path_factory):
    cfg = ExperimentConfig()  # n=5000 synthetic, synthetic seed 1, split seed 0
    t0 = time.perf_counter()
    art = run_experiment(cfg, out_dir=tmp_path_factory.mktemp("default_run"))
    return cfg, art, time.perf_counter() - t0


def longest_run(flags) -> int:
    best = cur = 0
    for f in flags:
        cur = cur + 1 if f else 0
        best = max(best, cur)
    return best


def test_criterion_07_complementary_synthetic(default_run):
    _, art, seconds = default_run
    rep = art.report
    t_bar = art.result.curves["ensemble"].t_bar
    baseline = max(rep["perf_g"], rep["perf_b"])
    run = longest_run(t_bar >= baseline - 0.005)
    frac = run / len(t_bar)
    ok = frac >= 0.2 and rep["ppcr"] is not None and rep["ppcr"] >= 0.2
    record(7, ok, f"contiguous {run}/{len(t_bar)} grid points ({100 * frac:.0f}%) within 0.005 of "
                  f"max(g, b); PPCR={rep['ppcr']:.3f}; glass/black/ensemble-max = "
                  f"{100 * rep['perf_g']:.1f}/{100 * rep['perf_b']:.1f}/{100 * rep['max_acc']:.1f}% "
                  f"(context only, reference triple 92.7/95.0/95.8); {seconds:.0f}s")
    assert ok


def test_criterion_10_determinism(default_run, tmp_path):
    cfg, art, _ = default_run
    again = run_experiment(cfg, out_dir=tmp_path / "rerun")
    names = ("report.json", "curve.csv", "curves_reference.csv", "policy.csv", "partition.csv")
    same = {n: (art.out_dir / n).read_bytes() == (again.out_dir / n).read_bytes() for n in names}
    ok = all(same.values())
    record(10, ok, "byte-identical " + ", ".join(n for n, s in same.items() if s)
           + ("" if ok else "; differing: " + ", ".join(n for n, s in same.items() if not s)))
    assert ok


# --------------------------------------------------------------- criterion 8

def test_criterion_08_replicated_table(tmp_path):
    cfg = ExperimentConfig(replicates=5, seeds=[0, 1, 2, 3, 4])
    t0 = time.perf_counter()
    summary = replicate(cfg, out_dir=tmp_path / "replicates")
    seconds = time.perf_counter() - t0
    metrics = summary["metrics"]
    columns = all(k in metrics and metrics[k]["mean"] is not None for k in REPORT_COLUMNS)
    sd_ok = all(metrics[k]["sd"] is not None for k in REPORT_COLUMNS)
    order = all(e >= o for e, o in zip(metrics["pqeom"]["values"], metrics["pqom"]["values"]))
    ok = columns and sd_ok and order and seconds < 600
    table = ", ".join(f"{k} {100 * metrics[k]['mean']:.0f}±{100 * metrics[k]['sd']:.0f}"
                      for k in REPORT_COLUMNS)
    record(8, ok, f"5 seeds in {seconds:.0f}s; {table}")
    assert ok


# --------------------------------------------------------------- criterion 9

def test_criterion_09_always_sufficient_reduction():
    rng = np.random.default_rng(9)
    cfg = SufficiencyConfig(ALWAYS)
    bad = 0
    for _ in range(1000):
        n = int(rng.integers(2, 40))
        loss_g = rng.uniform(0, 3, n)
        loss_b = rng.uniform(0, 3, n)
        if rng.random() < 0.3:  # force equal differences
            loss_g, loss_b = np.round(loss_g), np.round(loss_b)
        ids = rng.permutation(n) * 3 + 11
        ones = sufficiency_from(cfg, "regression", np.zeros(n), np.zeros(n))
        part = SufficiencyPartition(ids, ones, ones, loss_g, loss_b)
        ranking = al.ranking_from_partition(part)
        # glass-box priority: descending rank; expected: ascending loss_b - loss_g,
        # equal differences broken by the larger id first (ties rank lower id lower)
        got = [int(ids[i]) for i in np.argsort(-ranking.ranks, kind="stable")]
        want = [int(ids[i]) for i in sorted(range(n), key=lambda i: (loss_b[i] - loss_g[i], -ids[i]))]
        bad += got != want
    record(9, bad == 0, f"1000 instances, {bad} ranking mismatches")
    assert bad == 0
