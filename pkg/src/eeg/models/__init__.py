from .base import PROB_FLOOR, ModelError, PredictionModel, predict, predict_proba
from .gbt import GBTModel, fit_gbt
from .io import load_model, model_from_dict, model_to_json, save_model
from .linear import LinearModel, fit_linear
from .search import (DEFAULT_GRIDS, FAMILIES, FitReport, HyperparameterGrid, default_grid,
                     evaluation_loss, fit_family, grid_search)
from .tree import TreeModel, fit_tree

__all__ = [
    "PROB_FLOOR", "ModelError", "PredictionModel", "predict", "predict_proba",
    "GBTModel", "fit_gbt", "LinearModel", "fit_linear", "TreeModel", "fit_tree",
    "load_model", "save_model", "model_to_json", "model_from_dict",
    "DEFAULT_GRIDS", "FAMILIES", "FitReport", "HyperparameterGrid", "default_grid",
    "evaluation_loss", "fit_family", "grid_search",
]
