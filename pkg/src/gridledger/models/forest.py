"""Random forest: seeded bootstrap, per-split feature subsets, hard votes."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .config import TrainConfig
from .tree import (DecisionTree, DimensionMismatch, _resolve_max_features,
                   train_tree, tree_vote)


@dataclass
class Forest:
    trees: list[DecisionTree]
    n_classes: int
    n_features: int


def train_forest(X: np.ndarray, y: np.ndarray,
                 config: TrainConfig | None = None) -> Forest:
    config = config or TrainConfig(model_kind="forest")
    X = np.ascontiguousarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    n = X.shape[0]
    n_classes = int(y.max()) + 1 if y.size else 1
    max_features = _resolve_max_features(config.feature_subset, X.shape[1])
    rng = np.random.default_rng(config.random_state)
    trees = []
    for _ in range(config.n_estimators):
        split_seed = int(rng.integers(0, 2**31 - 1))
        if config.bootstrap:
            sample = rng.integers(0, n, n)
            Xb = np.ascontiguousarray(X[sample])
            yb = y[sample]
        else:
            Xb, yb = X, y
        trees.append(train_tree(Xb, yb, None, config, n_classes=n_classes,
                                max_features=max_features, seed=split_seed))
    return Forest(trees, n_classes, X.shape[1])


def forest_predict_proba(model: Forest, X: np.ndarray) -> np.ndarray:
    """Share of per-tree hard votes for each class."""
    X = np.ascontiguousarray(X, dtype=np.float64)
    if X.shape[1] != model.n_features:
        raise DimensionMismatch(
            f"expected {model.n_features} features, got {X.shape[1]}")
    votes = np.zeros((X.shape[0], model.n_classes))
    for tree in model.trees:
        votes[np.arange(X.shape[0]), tree_vote(tree, X)] += 1.0
    return votes / len(model.trees)
