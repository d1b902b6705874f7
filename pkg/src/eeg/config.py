"""Experiment configuration: one flat JSON object, every key optional.

Keys and defaults
-----------------
data_source          "synthetic" | "csv"                      ("synthetic")
csv_path             path to a headed CSV (data_source="csv")   (null)
target_column        response column name                      ("y")
task                 "classification" | "regression"          ("classification")
synthetic_n          generator size                            (5000)
synthetic_noise      label-flip rate                           (0.0)
synthetic_seed       generator seed                            (1)
split_ratios         train/validation/test fractions           ([0.7, 0.09, 0.21])
seed                 split and model seed for a single run     (0)
glass_families       candidate glass boxes                     (["linear", "tree"])
black_families       candidate black boxes                     (["gbt"])
grid_linear / grid_tree / grid_gbt
                     hyperparameter grids (name -> list)       (reduced defaults)
cv_folds             folds for grid search                     (4)
allocator_params     GBT allocator point (scalars) or grid (lists)
sufficiency_mode     null (task default) or a sufficiency mode (null)
feature_set          null (task default) or e.g. "x,g,b,d_mse" (null)
ablation_feature_sets  list of feature sets for ablate-features (the twelve standard sets)
q_grid_points        evenly spaced grid size                   (41)
q_grid               explicit grid; overrides q_grid_points    (null)
component_selection  "individual" | "combined"                 ("combined")
replicates           number of replicate runs                  (5)
seeds                replicate seeds                           ([0, 1, 2, 3, 4])
random_draws         draws for the sampled random curve        (1000)
out_dir              artifact directory                        ("runs/default")
reuse_models         load persisted g/b/allocator if present   (false)
"""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .allocation import ABLATION_SETS, DEFAULT_ALLOCATOR_PARAMS, normalize_feature_set
from .dataset import CLASSIFICATION, REGRESSION, TASKS
from .metrics import DEFAULT_GRID_POINTS, default_q_grid, validate_q_grid
from .models import DEFAULT_GRIDS, FAMILIES, HyperparameterGrid
from .sufficiency import CLASSIFICATION_EQUALITY, MODES, REGRESSION_EPSILON


class ConfigError(ValueError):
    pass


def _grid(family):
    return field(default_factory=lambda: {k: list(v) for k, v in DEFAULT_GRIDS[family].items()})


@dataclass
class ExperimentConfig:
    data_source: str = "synthetic"
    csv_path: str | None = None
    target_column: str = "y"
    task: str = CLASSIFICATION
    synthetic_n: int = 5000
    synthetic_noise: float = 0.0
    synthetic_seed: int = 1
    split_ratios: list = field(default_factory=lambda: [0.7, 0.09, 0.21])
    seed: int = 0
    glass_families: list = field(default_factory=lambda: ["linear", "tree"])
    black_families: list = field(default_factory=lambda: ["gbt"])
    grid_linear: dict = _grid("linear")
    grid_tree: dict = _grid("tree")
    grid_gbt: dict = _grid("gbt")
    cv_folds: int = 4
    allocator_params: dict = field(default_factory=lambda: dict(DEFAULT_ALLOCATOR_PARAMS))
    sufficiency_mode: str | None = None
    feature_set: str | None = None
    ablation_feature_sets: list = field(default_factory=lambda: [",".join(s) for s in ABLATION_SETS])
    q_grid_points: int = DEFAULT_GRID_POINTS
    q_grid: list | None = None
    component_selection: str = "combined"
    replicates: int = 5
    seeds: list = field(default_factory=lambda: [0, 1, 2, 3, 4])
    random_draws: int = 1000
    out_dir: str = "runs/default"
    reuse_models: bool = False

    def grid(self, family: str) -> HyperparameterGrid:
        return HyperparameterGrid(family, getattr(self, f"grid_{family}"))

    def grid_values(self) -> np.ndarray:
        if self.q_grid is not None:
            return np.asarray(self.q_grid, dtype=float)
        return default_q_grid(self.q_grid_points)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    def replace(self, **changes) -> "ExperimentConfig":
        return validate(dataclasses.replace(self, **changes))


def validate(cfg: ExperimentConfig) -> ExperimentConfig:
    try:
        if cfg.data_source not in ("synthetic", "csv"):
            raise ConfigError(f"data_source must be 'synthetic' or 'csv', got {cfg.data_source!r}")
        if cfg.data_source == "csv" and not cfg.csv_path:
            raise ConfigError("csv_path is required when data_source is 'csv'")
        if cfg.task not in TASKS:
            raise ConfigError(f"unknown task {cfg.task!r}")
        if cfg.data_source == "synthetic" and cfg.task != CLASSIFICATION:
            raise ConfigError("the synthetic generator produces a classification task")
        if len(cfg.split_ratios) != 3 or abs(sum(cfg.split_ratios) - 1.0) > 1e-9 \
                or min(cfg.split_ratios) <= 0:
            raise ConfigError(f"split_ratios must be three positive fractions summing to 1")
        for role in ("glass_families", "black_families"):
            fams = getattr(cfg, role)
            if not fams or any(f not in FAMILIES for f in fams):
                raise ConfigError(f"{role} must be a non-empty subset of {FAMILIES}")
            for f in fams:
                cfg.grid(f)
        if cfg.cv_folds < 2:
            raise ConfigError("cv_folds must be at least 2")
        if cfg.sufficiency_mode is not None:
            if cfg.sufficiency_mode not in MODES:
                raise ConfigError(f"unknown sufficiency_mode {cfg.sufficiency_mode!r}")
            if cfg.sufficiency_mode == CLASSIFICATION_EQUALITY and cfg.task != CLASSIFICATION:
                raise ConfigError("classification-equality mode needs a classification task")
            if cfg.sufficiency_mode == REGRESSION_EPSILON and cfg.task != REGRESSION:
                raise ConfigError("regression-epsilon mode needs a regression task")
        if cfg.feature_set is not None:
            fs = normalize_feature_set(cfg.feature_set)
            if cfg.task == REGRESSION and "d_ce" in fs:
                raise ConfigError("d_ce is not available for regression")
        for fs in cfg.ablation_feature_sets:
            normalize_feature_set(fs)
        validate_q_grid(cfg.grid_values())
        if cfg.component_selection not in ("individual", "combined"):
            raise ConfigError("component_selection must be 'individual' or 'combined'")
        if cfg.replicates < 1 or len(cfg.seeds) < cfg.replicates:
            raise ConfigError("need replicates >= 1 and at least that many seeds")
        if cfg.random_draws < 1:
            raise ConfigError("random_draws must be positive")
        params = cfg.allocator_params
        HyperparameterGrid("gbt", {k: list(v) if isinstance(v, (list, tuple)) else [v]
                                   for k, v in params.items()})
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    return cfg


def from_dict(d: dict) -> ExperimentConfig:
    names = {f.name for f in dataclasses.fields(ExperimentConfig)}
    unknown = set(d) - names
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    return validate(ExperimentConfig(**d))


def load_config(path=None, overrides: dict | None = None) -> ExperimentConfig:
    d = json.loads(Path(path).read_text()) if path else {}
    if not isinstance(d, dict):
        raise ConfigError("config file must hold a JSON object")
    d.update(overrides or {})
    return from_dict(d)


def parse_override(text: str) -> tuple[str, object]:
    """``key=value`` with the value parsed as JSON, falling back to a string."""
    if "=" not in text:
        raise ConfigError(f"override {text!r} is not key=value")
    key, raw = text.split("=", 1)
    try:
        value = json.loads(raw)
    except json.JSONDecodeError:
        value = raw
    return key.strip(), value
