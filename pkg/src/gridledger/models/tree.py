"""CART classification tree and the shared prediction plumbing."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._kernels import apply_tree, grow_classification_tree
from .config import TrainConfig


class DimensionMismatch(ValueError):
    pass


@dataclass
class DecisionTree:
    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    hist: np.ndarray          # (n_nodes, n_classes) weighted class counts
    n_features: int

    @property
    def n_classes(self) -> int:
        return self.hist.shape[1]


def gini_impurity(counts) -> float:
    """1 - sum(p^2) for a vector of class counts."""
    counts = np.asarray(counts, dtype=np.float64)
    total = counts.sum()
    if total == 0:
        return 0.0
    p = counts / total
    return float(1.0 - np.sum(p * p))


def _resolve_max_features(rule: str | None, n_features: int) -> int:
    if rule is None or rule == "all":
        return 0
    if rule == "sqrt":
        return max(1, int(np.sqrt(n_features)))
    if rule == "log2":
        return max(1, int(np.log2(n_features)))
    raise ValueError(f"unknown feature_subset rule {rule!r}")


def train_tree(X: np.ndarray, y: np.ndarray, weights: np.ndarray | None = None,
               config: TrainConfig | None = None, n_classes: int | None = None,
               max_features: int = 0, seed: int = 0) -> DecisionTree:
    """Grow one greedy Gini tree; thresholds at midpoints of adjacent values."""
    config = config or TrainConfig(model_kind="forest")
    X = np.ascontiguousarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    if weights is None:
        weights = np.ones(X.shape[0])
    weights = np.asarray(weights, dtype=np.float64)
    if n_classes is None:
        n_classes = int(y.max()) + 1 if y.size else 1
    feature, threshold, left, right, hist = grow_classification_tree(
        X, y, weights, n_classes, config.resolved_max_depth(),
        config.min_samples_leaf, max_features, seed)
    return DecisionTree(feature, threshold, left, right, hist, X.shape[1])


def tree_predict_proba(tree: DecisionTree, X: np.ndarray) -> np.ndarray:
    X = np.ascontiguousarray(X, dtype=np.float64)
    if X.shape[1] != tree.n_features:
        raise DimensionMismatch(
            f"expected {tree.n_features} features, got {X.shape[1]}")
    leaves = apply_tree(X, tree.feature, tree.threshold, tree.left, tree.right)
    counts = tree.hist[leaves]
    totals = counts.sum(axis=1, keepdims=True)
    totals[totals == 0] = 1.0
    return counts / totals


def tree_vote(tree: DecisionTree, X: np.ndarray) -> np.ndarray:
    """Hard class vote per row (argmax of the leaf histogram)."""
    X = np.ascontiguousarray(X, dtype=np.float64)
    leaves = apply_tree(X, tree.feature, tree.threshold, tree.left, tree.right)
    return np.argmax(tree.hist[leaves], axis=1)
