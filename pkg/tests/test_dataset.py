import json

import numpy as np
import pytest

from eeg.dataset import (CLASSIFICATION, REGRESSION, DataError, Dataset, Scaler,
                         apply_scaler, complementary_label, fit_scaler, gen_complementary_2d,
                         load_csv, load_dataset, save_dataset, split)


def small(n, seed=0):
    r = np.random.default_rng(seed)
    return Dataset(r.normal(size=(n, 2)), r.integers(0, 2, n), CLASSIFICATION, 2)


def write(tmp_path, text, name="d.csv"):
    p = tmp_path / name
    p.write_text(text)
    return p


def test_csv_dense_class_reindexing(tmp_path):
    p = write(tmp_path, "x1,y\n0.5,a\n1.5,b\n2.5,a\n")
    d = load_csv(p, CLASSIFICATION, "y")
    assert d.n == 3 and d.n_classes == 2
    assert d.y.tolist() == [0, 1, 0]
    assert d.classes == ("a", "b")


def test_csv_blank_cell_names_row_and_column(tmp_path):
    p = write(tmp_path, "x1,x2,y\n1,2,a\n3,,b\n")
    with pytest.raises(DataError) as err:
        load_csv(p, CLASSIFICATION, "y")
    msg = str(err.value)
    assert "x2" in msg and "3" in msg  # data row 2 is file row 3


def test_csv_regression_values_preserved(tmp_path):
    p = write(tmp_path, "x1,y\n0,1.0\n1,2.0\n")
    d = load_csv(p, REGRESSION, "y")
    assert d.y.tolist() == [1.0, 2.0]


def test_csv_missing_target_column(tmp_path):
    p = write(tmp_path, "x1,z\n0,1\n")
    with pytest.raises(DataError):
        load_csv(p, REGRESSION, "y")


def test_csv_non_numeric_feature(tmp_path):
    p = write(tmp_path, "x1,y\nfoo,1\n")
    with pytest.raises(DataError, match="x1"):
        load_csv(p, REGRESSION, "y")


def test_split_sizes_default_ratios():
    d = gen_complementary_2d(100, seed=3)
    s = split(d, (0.70, 0.09, 0.21), seed=7)
    assert (s.train.n, s.validation.n, s.test.n) == (70, 9, 21)


def test_split_small_n_covers_all_ids():
    d = small(10)
    s = split(d, (0.70, 0.09, 0.21), seed=0)
    assert (s.train.n, s.validation.n, s.test.n) == (7, 1, 2)
    ids = np.concatenate([s.train.ids, s.validation.ids, s.test.ids])
    assert sorted(ids.tolist()) == list(range(10))


def test_split_deterministic_and_disjoint():
    d = gen_complementary_2d(200, seed=3)
    a, b = split(d, seed=11), split(d, seed=11)
    for part in ("train", "validation", "test"):
        assert np.array_equal(getattr(a, part).ids, getattr(b, part).ids)
    assert not set(a.train.ids) & set(a.test.ids)
    assert not np.array_equal(split(d, seed=12).train.ids, a.train.ids)


def test_split_rejects_tiny_dataset():
    with pytest.raises(DataError):
        split(small(5))


def test_scaler_endpoints_constant_and_no_clamp():
    X = np.array([[0.0, 3.0], [5.0, 3.0], [10.0, 3.0]])
    train = Dataset(X, [0.0, 5.0, 10.0], REGRESSION)
    sc = fit_scaler(train)
    out = apply_scaler(sc, train)
    assert out.X[:, 0].tolist() == [-1.0, 0.0, 1.0]
    assert out.X[:, 1].tolist() == [0.0, 0.0, 0.0]
    # affine map of [0, 10] to [-1, 1] sends 20 to 3
    assert sc.transform_X(np.array([[20.0, 3.0]]))[0, 0] == pytest.approx(3.0)
    assert np.allclose(sc.inverse_y(sc.transform_y(np.array([2.5, 7.0]))), [2.5, 7.0])


def test_scaler_dimension_mismatch():
    sc = fit_scaler(Dataset(np.zeros((3, 2)) + np.arange(3)[:, None], [0, 1, 0], CLASSIFICATION, 2))
    with pytest.raises(DataError):
        sc.transform_X(np.zeros((1, 3)))


def test_scaler_round_trip_dict():
    sc = fit_scaler(small(50, 2))
    again = Scaler.from_dict(json.loads(json.dumps(sc.to_dict())))
    x = np.array([[0.3, -0.2]])
    assert np.array_equal(sc.transform_X(x), again.transform_X(x))


def test_generator_balance_and_determinism():
    d = gen_complementary_2d(2000, seed=1, noise=0.0)
    frac = d.y.mean()
    assert 0.35 <= frac <= 0.65
    assert np.array_equal(d.y, complementary_label(d.X))
    d2 = gen_complementary_2d(2000, seed=1)
    assert np.array_equal(d.X, d2.X) and np.array_equal(d.y, d2.y)


def test_generator_noise_half_destroys_signal():
    d = gen_complementary_2d(20000, seed=4, noise=0.5)
    agreement = np.mean(d.y == complementary_label(d.X))
    assert abs(agreement - 0.5) <= 0.03


def test_dataset_is_read_only():
    d = small(20)
    with pytest.raises(ValueError):
        d.X[0, 0] = 1.0


def test_save_load_round_trip(tmp_path):
    d = gen_complementary_2d(100, seed=5)
    save_dataset(d, tmp_path / "syn.csv")
    back, _ = load_dataset(tmp_path / "syn.csv")
    assert np.allclose(back.X, d.X) and np.array_equal(back.y, d.y)


def test_generator_rejects_small_n():
    with pytest.raises(DataError):
        gen_complementary_2d(30)
