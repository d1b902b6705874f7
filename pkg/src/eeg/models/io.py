"""JSON model format.

Every file is an object ``{"family", "task", "n_features", "n_classes",
"params"}``. ``params`` holds the family's hyperparameters and fitted state;
trees are stored as parallel node arrays ``feature``, ``threshold``, ``left``,
``right``, ``value`` and ``n_samples`` with ``feature == -1`` marking leaves.
GBT ``trees`` is a list of stages, each a list of one tree per output.
"""

from __future__ import annotations

import json
from pathlib import Path

from .base import ModelError, PredictionModel
from .gbt import GBTModel
from .linear import LinearModel
from .tree import TreeModel

_CLASSES = {cls.family: cls for cls in (LinearModel, TreeModel, GBTModel)}


def model_to_json(model: PredictionModel) -> str:
    return json.dumps(model.to_dict(), sort_keys=True, separators=(",", ":"))


def model_from_dict(d: dict) -> PredictionModel:
    try:
        cls = _CLASSES[d["family"]]
    except KeyError:
        raise ModelError(f"unknown model family {d.get('family')!r}") from None
    return cls.from_params(d["task"], d["n_features"], d["n_classes"], d["params"])


def save_model(model: PredictionModel, path) -> None:
    Path(path).write_text(model_to_json(model) + "\n")


def load_model(path) -> PredictionModel:
    return model_from_dict(json.loads(Path(path).read_text()))
