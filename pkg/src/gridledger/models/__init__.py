"""Native classifier implementations: logistic regression, random forest,
and gradient-boosted trees, plus hyperparameter search and serialization."""

from __future__ import annotations

import numpy as np

from .artifact import (ManifestMismatch, ModelArtifact, load_artifact,
                       manifest_hash, save_artifact)
from .boosting import (BoostedEnsemble, BoostedRegressor, gbt_margins,
                       gbt_predict_proba, gbt_regressor_predict,
                       softmax_gradient_hessian, train_gbt,
                       train_gbt_regressor)
from .config import MODEL_KINDS, TrainConfig, default_config
from .forest import Forest, forest_predict_proba, train_forest
from .linear import (LinearModel, NonFiniteInput, linear_predict_proba,
                     logreg_gradient, logreg_loss, train_logreg)
from .search import EmptySpace, SearchResult, grid_search, random_search
from .tree import (DecisionTree, DimensionMismatch, gini_impurity, train_tree,
                   tree_predict_proba)

__all__ = [
    "BoostedEnsemble", "BoostedRegressor", "DecisionTree", "DimensionMismatch",
    "EmptySpace", "Forest", "LinearModel", "ManifestMismatch", "ModelArtifact",
    "MODEL_KINDS", "NonFiniteInput", "SearchResult", "TrainConfig",
    "default_config", "gbt_margins", "gbt_predict_proba",
    "gbt_regressor_predict", "gini_impurity", "grid_search", "load_artifact",
    "manifest_hash", "predict", "predict_proba", "random_search",
    "save_artifact", "softmax_gradient_hessian", "train", "train_forest",
    "train_gbt", "train_gbt_regressor", "train_logreg", "train_tree",
]


def predict_proba(model, X: np.ndarray) -> np.ndarray:
    """Class-probability rows for any trained classifier."""
    if isinstance(model, LinearModel):
        return linear_predict_proba(model, X)
    if isinstance(model, Forest):
        return forest_predict_proba(model, X)
    if isinstance(model, BoostedEnsemble):
        return gbt_predict_proba(model, X)
    if isinstance(model, DecisionTree):
        return tree_predict_proba(model, X)
    raise TypeError(f"cannot predict with {type(model).__name__}")


def predict(model, X: np.ndarray) -> np.ndarray:
    """Argmax of predict_proba; ties resolve to the lowest class index."""
    return np.argmax(predict_proba(model, X), axis=1)


def train(X: np.ndarray, y: np.ndarray, config: TrainConfig):
    """Dispatch to the trainer selected by config.model_kind."""
    if config.model_kind == "logreg":
        return train_logreg(X, y, config)
    if config.model_kind == "forest":
        return train_forest(X, y, config)
    return train_gbt(X, y, config)
