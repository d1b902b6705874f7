import numpy as np
import pytest

from eeg.dataset import CLASSIFICATION, REGRESSION, Dataset


def make_ds(X, y, task=CLASSIFICATION, n_classes=None, ids=None):
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    if task == CLASSIFICATION and n_classes is None:
        n_classes = int(np.max(y)) + 1
    return Dataset(X, np.asarray(y), task, n_classes if task == CLASSIFICATION else None, ids)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


class TableModel:
    """Stub model returning preset outputs, looked up by ``X[:, 0]`` as row index."""

    family = "table"

    def __new__(cls, outputs, task=CLASSIFICATION):
        from eeg.models import PredictionModel

        outs = np.asarray(outputs, dtype=float)

        class _M(PredictionModel):
            family = "table"

            def _raw(self, X):
                return outs[X[:, 0].astype(int)]

        return _M(task, 1, outs.shape[1] if task == CLASSIFICATION else None)


def index_ds(y, task=CLASSIFICATION, n_classes=2):
    n = len(y)
    return make_ds(np.arange(n, dtype=float), y, task, n_classes)


FAST = {
    "synthetic_n": 400,
    "grid_linear": {"l1_penalty": [0.01]},
    "grid_tree": {"min_split": [8], "max_leaf": [64], "max_depth": [6]},
    "grid_gbt": {"learning_rate": [0.1], "n_estimators": [30], "max_depth": [3], "subsample": [1.0]},
    "allocator_params": {"learning_rate": 0.1, "n_estimators": 30, "max_depth": 3, "subsample": 1.0},
    "q_grid_points": 11,
    "random_draws": 50,
    "replicates": 2,
    "seeds": [0, 1],
}


@pytest.fixture
def fast_cfg(tmp_path):
    from eeg.config import from_dict
    return from_dict(dict(FAST, out_dir=str(tmp_path / "run")))


ACCEPTANCE_LINES: dict[int, str] = {}


def record(criterion: int, passed: bool, detail: str) -> None:
    line = f"criterion {criterion:2d}: {'PASS' if passed else 'FAIL'} - {detail}"
    ACCEPTANCE_LINES[criterion] = line
    print(line)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for k in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[k])
