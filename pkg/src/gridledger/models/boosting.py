"""Gradient-boosted trees with a second-order (Newton) objective.

Multiclass training uses the softmax objective: per round and class a
regression tree is fitted to the gradient/hessian of the current margins,
and each leaf contributes -sum(g) / (sum(h) + lambda) scaled by the
learning rate.  The base score is the log of the class priors.  A
squared-error regression mode reuses the same tree machinery.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._kernels import apply_tree, grow_regression_tree
from .config import TrainConfig
from .linear import softmax
from .tree import DimensionMismatch


@dataclass
class RegressionTree:
    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray

    def predict(self, X: np.ndarray) -> np.ndarray:
        leaves = apply_tree(X, self.feature, self.threshold, self.left, self.right)
        return self.value[leaves]


@dataclass
class BoostedEnsemble:
    base_scores: np.ndarray            # (n_classes,) log priors
    trees: list[list[RegressionTree]]  # [round][class]
    learning_rate: float
    n_features: int

    @property
    def n_classes(self) -> int:
        return self.base_scores.shape[0]


@dataclass
class BoostedRegressor:
    base_score: float
    trees: list[RegressionTree]
    learning_rate: float
    n_features: int


def softmax_gradient_hessian(margins: np.ndarray,
                             y: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Per-sample gradient and diagonal hessian of softmax cross-entropy
    with respect to the margins."""
    probs = softmax(margins)
    Y = np.eye(margins.shape[1])[y]
    return probs - Y, probs * (1.0 - probs)


def train_gbt(X: np.ndarray, y: np.ndarray,
              config: TrainConfig | None = None) -> BoostedEnsemble:
    config = config or TrainConfig(model_kind="gbt")
    X = np.ascontiguousarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    n = X.shape[0]
    n_classes = int(y.max()) + 1 if y.size else 1
    priors = np.bincount(y, minlength=n_classes) / n
    base_scores = np.log(np.clip(priors, 1e-12, None))
    margins = np.tile(base_scores, (n, 1))
    lr = config.resolved_learning_rate()
    lam = config.resolved_l2_lambda()
    depth = config.resolved_max_depth()

    rounds: list[list[RegressionTree]] = []
    for _ in range(config.n_estimators):
        grad, hess = softmax_gradient_hessian(margins, y)
        round_trees: list[RegressionTree] = []
        for k in range(n_classes):
            parts = grow_regression_tree(
                X, np.ascontiguousarray(grad[:, k]),
                np.ascontiguousarray(hess[:, k]), lam, depth,
                config.min_samples_leaf)
            tree = RegressionTree(*parts)
            margins[:, k] += lr * tree.predict(X)
            round_trees.append(tree)
        rounds.append(round_trees)
    return BoostedEnsemble(base_scores, rounds, lr, X.shape[1])


def gbt_margins(model: BoostedEnsemble, X: np.ndarray) -> np.ndarray:
    X = np.ascontiguousarray(X, dtype=np.float64)
    if X.shape[1] != model.n_features:
        raise DimensionMismatch(
            f"expected {model.n_features} features, got {X.shape[1]}")
    margins = np.tile(model.base_scores, (X.shape[0], 1))
    for round_trees in model.trees:
        for k, tree in enumerate(round_trees):
            margins[:, k] += model.learning_rate * tree.predict(X)
    return margins


def gbt_predict_proba(model: BoostedEnsemble, X: np.ndarray) -> np.ndarray:
    return softmax(gbt_margins(model, X))


def train_gbt_regressor(X: np.ndarray, y: np.ndarray,
                        config: TrainConfig | None = None) -> BoostedRegressor:
    """Squared-error boosting: g = prediction - target, h = 1."""
    config = config or TrainConfig(model_kind="gbt")
    X = np.ascontiguousarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    base = float(y.mean()) if y.size else 0.0
    pred = np.full(y.shape[0], base)
    lr = config.resolved_learning_rate()
    lam = config.resolved_l2_lambda()
    depth = config.resolved_max_depth()
    ones = np.ones(y.shape[0])
    trees: list[RegressionTree] = []
    for _ in range(config.n_estimators):
        grad = pred - y
        parts = grow_regression_tree(X, grad, ones, lam, depth,
                                     config.min_samples_leaf)
        tree = RegressionTree(*parts)
        pred += lr * tree.predict(X)
        trees.append(tree)
    return BoostedRegressor(base, trees, lr, X.shape[1])


def gbt_regressor_predict(model: BoostedRegressor, X: np.ndarray) -> np.ndarray:
    X = np.ascontiguousarray(X, dtype=np.float64)
    if X.shape[1] != model.n_features:
        raise DimensionMismatch(
            f"expected {model.n_features} features, got {X.shape[1]}")
    pred = np.full(X.shape[0], model.base_score)
    for tree in model.trees:
        pred += model.learning_rate * tree.predict(X)
    return pred
