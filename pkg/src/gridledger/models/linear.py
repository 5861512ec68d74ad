"""Multinomial logistic regression trained by full-batch gradient descent."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .config import TrainConfig


class NonFiniteInput(ValueError):
    pass


@dataclass
class LinearModel:
    weights: np.ndarray   # (n_classes, n_features)
    biases: np.ndarray    # (n_classes,)

    @property
    def n_features(self) -> int:
        return self.weights.shape[1]

    @property
    def n_classes(self) -> int:
        return self.weights.shape[0]


def softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=1, keepdims=True)
    exp = np.exp(shifted)
    return exp / exp.sum(axis=1, keepdims=True)


def _loss_grad(weights, biases, X, Y, l2):
    n = X.shape[0]
    probs = softmax(X @ weights.T + biases)
    # cross entropy with optional L2 on the weights (not the biases)
    loss = -np.sum(Y * np.log(np.clip(probs, 1e-300, None))) / n
    loss += 0.5 * l2 * np.sum(weights * weights)
    diff = probs - Y
    grad_w = diff.T @ X / n + l2 * weights
    grad_b = diff.sum(axis=0) / n
    return loss, grad_w, grad_b


def logreg_loss(model: LinearModel, X: np.ndarray, y: np.ndarray,
                l2: float = 0.0) -> float:
    Y = np.eye(model.n_classes)[y]
    loss, _, _ = _loss_grad(model.weights, model.biases, X, Y, l2)
    return float(loss)


def logreg_gradient(model: LinearModel, X: np.ndarray, y: np.ndarray,
                    l2: float = 0.0) -> tuple[np.ndarray, np.ndarray]:
    """Analytic gradient of the training loss; exposed for gradient checks."""
    Y = np.eye(model.n_classes)[y]
    _, grad_w, grad_b = _loss_grad(model.weights, model.biases, X, Y, l2)
    return grad_w, grad_b


def train_logreg(X: np.ndarray, y: np.ndarray,
                 config: TrainConfig | None = None) -> LinearModel:
    """Minimise softmax cross-entropy with backtracking gradient descent.

    Steps that would increase the loss are halved until they do not; training
    stops at max_iterations or when the gradient inf-norm drops below 1e-6.
    Zero initialisation makes the run deterministic regardless of seed.
    """
    config = config or TrainConfig(model_kind="logreg")
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    if not np.all(np.isfinite(X)):
        raise NonFiniteInput("X contains non-finite values")
    n_classes = int(y.max()) + 1 if y.size else 1
    Y = np.eye(n_classes)[y]
    weights = np.zeros((n_classes, X.shape[1]))
    biases = np.zeros(n_classes)
    l2 = config.resolved_l2_lambda()
    base_lr = config.resolved_learning_rate()

    loss, grad_w, grad_b = _loss_grad(weights, biases, X, Y, l2)
    for _ in range(config.max_iterations):
        grad_norm = max(np.abs(grad_w).max(initial=0.0),
                        np.abs(grad_b).max(initial=0.0))
        if grad_norm < 1e-6:
            break
        lr = base_lr
        for _attempt in range(50):
            cand_w = weights - lr * grad_w
            cand_b = biases - lr * grad_b
            cand_loss, cand_gw, cand_gb = _loss_grad(cand_w, cand_b, X, Y, l2)
            if cand_loss <= loss:
                break
            lr *= 0.5
        weights, biases = cand_w, cand_b
        loss, grad_w, grad_b = cand_loss, cand_gw, cand_gb
    return LinearModel(weights, biases)


def linear_predict_proba(model: LinearModel, X: np.ndarray) -> np.ndarray:
    return softmax(np.asarray(X, dtype=np.float64) @ model.weights.T + model.biases)
