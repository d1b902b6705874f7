import itertools
import math

import numpy as np
import pytest

from eeg.allocation import (FEATURE_DEPENDENT, FEATURE_INDEPENDENT, AllocationError,
                            LearnedAllocator, allocate_top_q, build_allocator_features,
                            d_ce, d_mse, default_feature_set, desirability_percentile,
                            desirability_score, ensemble_allocators, ensembled_policy,
                            estimate_sufficiency_category, feature_independent_scores, n_q,
                            normalize_feature_set, oracle_allocation, random_expectation_curve,
                            random_sampled_curve, top_q_masks, train_learned_allocator)
from eeg.dataset import CLASSIFICATION, REGRESSION
from eeg.metrics import pcfa
from eeg.sufficiency import ALWAYS, CLASSIFICATION_EQUALITY, SufficiencyConfig, SufficiencyPartition

from conftest import TableModel, index_ds


def logistic(x):
    return 1.0 / (1.0 + math.exp(-x))


# ------------------------------------------------------------------ scores

def test_score_examples():
    assert desirability_score(1, 0, 0.3, 0.3) == 1.5
    assert desirability_score(0, 1, 0.3, 0.3) == -1.5
    assert desirability_score(1, 1, 0.0, 0.8) == pytest.approx(1 - logistic(0.8), abs=1e-12)
    assert desirability_score(1, 1, 0.0, 0.8) == pytest.approx(0.3100, abs=5e-5)


def test_score_stays_inside_interval_for_extreme_losses():
    assert 1.0 < desirability_score(1, 0, 0.0, 1e6) < 2.0
    assert -2.0 < desirability_score(0, 1, 1e6, 0.0) < -1.0


def test_score_rejects_non_finite():
    with pytest.raises(AllocationError):
        desirability_score(1, 1, np.inf, 0.0)


def test_ranks_and_percentiles():
    r = desirability_percentile([1.5, 0.5, -0.5, -1.5])
    assert r.ranks.tolist() == [4, 3, 2, 1]
    assert r.percentile.tolist() == [1.0, 0.75, 0.5, 0.25]
    assert desirability_percentile([0.3]).percentile.tolist() == [1.0]


def test_rank_tie_break_by_id():
    r = desirability_percentile([0.2, 0.2], ids=[7, 3])
    assert r.ranks.tolist() == [2, 1]  # id 3 ranks lower


# ------------------------------------------------------------------- top-q

def test_top_q_selects_highest():
    s = [1.5, 0.5, -0.5, -1.5]
    assert allocate_top_q(s, 0.5).tolist() == [True, True, False, False]
    assert not allocate_top_q(s, 0.0).any()
    assert allocate_top_q(s, 1.0).all()


def test_n_q_rounding():
    assert n_q(0.25, 10) == 2  # round half to even
    assert n_q(0.35, 10) == 4
    assert n_q(0.3, 10) == 3
    assert n_q(0.7, 10) == 7
    with pytest.raises(AllocationError):
        n_q(1.2, 10)


def test_top_q_masks_match_single_calls(rng):
    s = rng.normal(size=37)
    grid = np.linspace(0, 1, 11)
    masks = top_q_masks(s, grid)
    for q, m in zip(grid, masks):
        assert np.array_equal(m, allocate_top_q(s, q))


def _part(s_g, s_b, loss_g=None, loss_b=None):
    n = len(s_g)
    return SufficiencyPartition(np.arange(n), s_g, s_b,
                                np.zeros(n) if loss_g is None else np.asarray(loss_g, float),
                                np.zeros(n) if loss_b is None else np.asarray(loss_b, float))


def test_oracle_category_dominance():
    part = _part([0, 1, 1, 0], [1, 0, 0, 1])
    assert oracle_allocation(part, 0.5).tolist() == [False, True, True, False]


def test_oracle_all_zg_follows_loss_order():
    part = _part([1] * 4, [0] * 4, loss_g=[0.0] * 4, loss_b=[0.4, -0.1, 0.9, 0.2])
    # smaller loss_b - loss_g gives a higher score
    assert oracle_allocation(part, 0.5).tolist() == [False, True, False, True]


def test_oracle_matches_exhaustive_search(rng):
    for _ in range(30):
        n = 10
        s_g, s_b = rng.integers(0, 2, n), rng.integers(0, 2, n)
        part = _part(s_g, s_b, rng.exponential(size=n), rng.exponential(size=n))
        for i in range(n + 1):
            mask = oracle_allocation(part, i / n)
            got = np.where(mask, s_g, s_b).sum()
            best = max(sum(s_g[j] if j in c else s_b[j] for j in range(n))
                       for c in map(set, itertools.combinations(range(n), i)))
            assert got == best


# ------------------------------------------------------------ random curve

def test_random_expectation_values():
    part = _part([1] * 6 + [0] * 4, [1] * 9 + [0])
    assert random_expectation_curve(part, [0, 0.5, 1]).tolist() == pytest.approx([0.9, 0.75, 0.6])


def test_random_sampled_matches_closed_form():
    part = _part([1] * 6 + [0] * 4, [1] * 9 + [0])
    grid = np.linspace(0, 1, 11)
    sampled = random_sampled_curve(part, grid, n_draws=4000, seed=1)
    assert np.max(np.abs(sampled - random_expectation_curve(part, grid))) < 0.01
    assert sampled[0] == pytest.approx(0.9) and sampled[-1] == pytest.approx(0.6)


# ---------------------------------------------------------------- features

def test_distances():
    assert d_mse([0.3, 0.7], [0.3, 0.7]).tolist() == [0.0, 0.0]
    assert d_mse(0.2, 0.8) == pytest.approx(0.36)
    assert d_ce([[1.0, 0.0]], [[1.0, 0.0]])[0] == pytest.approx(0.0, abs=1e-12)
    # cross-entropy of b under g, by hand
    assert d_ce([[0.25, 0.75]], [[0.5, 0.5]])[0] == pytest.approx(-0.5 * math.log(0.25) - 0.5 * math.log(0.75))


def test_feature_independent_selects_largest_distance():
    scores = feature_independent_scores([0.0, 0.0, 0.0], [0.9 ** 0.5, 0.1 ** 0.5, 0.5 ** 0.5], REGRESSION)
    assert allocate_top_q(scores, 1 / 3).tolist() == [True, False, False]
    assert allocate_top_q(scores, 1.0).all()
    equal = feature_independent_scores([0.0] * 3, [0.5] * 3, REGRESSION)
    assert allocate_top_q(equal, 1 / 3, ids=[4, 9, 2]).tolist() == [False, True, False]


def test_feature_set_handling():
    assert normalize_feature_set("d_mse, x ,g") == ("x", "g", "d_mse")
    assert default_feature_set(CLASSIFICATION) == ("x", "g", "b", "d_ce", "d_mse")
    assert "d_ce" not in default_feature_set(REGRESSION)
    with pytest.raises(AllocationError):
        normalize_feature_set("x,nope")
    with pytest.raises(AllocationError):
        build_allocator_features(np.zeros((2, 1)), [0, 0], [1, 1], "d_ce", REGRESSION)
    Z = build_allocator_features(np.zeros((2, 3)), [[0.5, 0.5]] * 2, [[1.0, 0.0]] * 2,
                                 ("x", "g", "b", "d_ce", "d_mse"), CLASSIFICATION)
    assert Z.shape == (2, 3 + 2 + 2 + 1 + 1)


# ------------------------------------------------------- learned allocator

def _monotone_setup(n=200):
    # always-sufficient, y = 0, g exact, b's loss shrinking with the index:
    # the true percentile of row i is (i + 1) / n
    g = TableModel(np.zeros(n), REGRESSION)
    b = TableModel(np.sqrt(np.linspace(2.0, 0.01, n)), REGRESSION)
    return index_ds(np.zeros(n), REGRESSION), g, b


def test_allocator_learns_monotone_target():
    train, g, b = _monotone_setup()
    alloc = train_learned_allocator(train, g, b, SufficiencyConfig(ALWAYS), "x")
    pred = alloc.predict(train.X, g.outputs(train.X), b.outputs(train.X))
    target = np.arange(1, 201) / 200
    assert np.mean((pred - target) ** 2) < 0.01
    assert alloc.train_counts == {"Zg": 0, "Zb": 0, "Z2": 200, "Z0": 0}


def test_allocator_single_observation_predicts_one():
    train, g, b = _monotone_setup(1)
    alloc = train_learned_allocator(train, g, b, SufficiencyConfig(ALWAYS), "x")
    assert alloc.predict(train.X, g.outputs(train.X), b.outputs(train.X)).tolist() == [1.0]


def test_allocator_deterministic_and_serializable():
    train, g, b = _monotone_setup()
    params = {"learning_rate": 0.1, "n_estimators": 20, "max_depth": 2, "subsample": 0.5}
    a1 = train_learned_allocator(train, g, b, SufficiencyConfig(ALWAYS), "x,b", params, seed=3)
    a2 = train_learned_allocator(train, g, b, SufficiencyConfig(ALWAYS), "x,b", params, seed=3)
    args = (train.X, g.outputs(train.X), b.outputs(train.X))
    assert np.array_equal(a1.predict(*args), a2.predict(*args))
    back = LearnedAllocator.from_dict(a1.to_dict())
    assert np.array_equal(back.predict(*args), a1.predict(*args))


def test_allocator_tunes_when_given_lists():
    train, g, b = _monotone_setup(80)
    params = {"learning_rate": [0.1], "n_estimators": [5, 20], "max_depth": 2, "subsample": 1.0}
    alloc = train_learned_allocator(train, g, b, SufficiencyConfig(ALWAYS), "x", params)
    assert alloc.tuning is not None and len(alloc.tuning["grid_losses"]) == 2


# ---------------------------------------------------------------- ensemble

def _three_obs():
    # rows: Zg, Zb, Z2
    part = _part([1, 0, 1], [0, 1, 1])
    learned = np.array([3.0, 1.0, 2.0])      # oracle order
    independent = np.array([1.0, 3.0, 2.0])  # reversed
    return part, learned, independent


def test_ensemble_learned_always_better():
    part, learned, independent = _three_obs()
    tags = ensemble_allocators(learned, independent, part, [1 / 3, 2 / 3])
    assert tags == [FEATURE_DEPENDENT] * 2 and pcfa(tags) == 1.0


def test_ensemble_identical_scores_tie_to_independent():
    part, learned, _ = _three_obs()
    tags = ensemble_allocators(learned, learned, part, np.linspace(0, 1, 4))
    assert set(tags) == {FEATURE_INDEPENDENT} and pcfa(tags) == 0.0


def test_ensemble_half_the_grid():
    # endpoints always tie, the two interior points go to the learned allocator
    part, learned, independent = _three_obs()
    tags = ensemble_allocators(learned, independent, part, [0, 1 / 3, 2 / 3, 1])
    assert tags == [FEATURE_INDEPENDENT, FEATURE_DEPENDENT, FEATURE_DEPENDENT, FEATURE_INDEPENDENT]
    assert pcfa(tags) == 0.5
    pol = ensembled_policy(learned, independent, tags, [0, 1 / 3, 2 / 3, 1], part.ids)
    assert pol.masks[1].tolist() == [True, False, False]


def test_category_estimation():
    even = {"Zg": 25, "Zb": 25, "Z2": 25, "Z0": 25}
    assert estimate_sufficiency_category(0.9, even) == "Zg"
    assert estimate_sufficiency_category(0.10, even) == "Zb"
    assert estimate_sufficiency_category([0.25, 0.26, 0.5, 0.75, 0.76], even).tolist() == \
        ["Zb", "Z0", "Z0", "Z2", "Zg"]
    only_b = {"Zg": 0, "Zb": 10, "Z2": 0, "Z0": 0}
    assert set(estimate_sufficiency_category(np.linspace(0.01, 1, 50), only_b)) == {"Zb"}
