"""Classification metrics, table-style reports, ROC-AUC, and stratified
k-fold cross-validation."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


class LengthMismatch(ValueError):
    pass


class LabelOutOfRange(ValueError):
    pass


class SingleClass(ValueError):
    pass


class ClassTooSmallForK(ValueError):
    pass


def confusion_matrix(y_true, y_pred, n_classes: int) -> np.ndarray:
    """Counts matrix: entry (i, j) = rows with true class i predicted as j."""
    y_true = np.asarray(y_true, dtype=np.int64)
    y_pred = np.asarray(y_pred, dtype=np.int64)
    if y_true.shape[0] != y_pred.shape[0]:
        raise LengthMismatch(f"{y_true.shape[0]} != {y_pred.shape[0]}")
    for arr in (y_true, y_pred):
        if arr.size and (arr.min() < 0 or arr.max() >= n_classes):
            raise LabelOutOfRange(f"labels must be in [0, {n_classes})")
    matrix = np.zeros((n_classes, n_classes), dtype=np.int64)
    np.add.at(matrix, (y_true, y_pred), 1)
    return matrix


@dataclass
class ClassReport:
    class_names: list[str]
    precision: np.ndarray
    recall: np.ndarray
    f1: np.ndarray
    support: np.ndarray
    accuracy: float
    macro_precision: float = 0.0
    macro_recall: float = 0.0
    macro_f1: float = 0.0
    weighted_precision: float = 0.0
    weighted_recall: float = 0.0
    weighted_f1: float = 0.0
    confusion: np.ndarray = field(default_factory=lambda: np.zeros((0, 0), dtype=np.int64))

    @property
    def n(self) -> int:
        return int(self.support.sum())


def f1_score(precision: float, recall: float) -> float:
    if precision + recall == 0:
        return 0.0
    return 2 * precision * recall / (precision + recall)


def classification_report(y_true, y_pred, class_names: list[str]) -> ClassReport:
    """Per-class precision/recall/F1/support plus accuracy and the macro and
    support-weighted averages.  Zero denominators yield zero, matching the
    convention used throughout the reports."""
    n_classes = len(class_names)
    matrix = confusion_matrix(y_true, y_pred, n_classes)
    n = matrix.sum()
    diag = np.diag(matrix).astype(np.float64)
    col = matrix.sum(axis=0).astype(np.float64)
    row = matrix.sum(axis=1).astype(np.float64)
    precision = np.divide(diag, col, out=np.zeros(n_classes), where=col > 0)
    recall = np.divide(diag, row, out=np.zeros(n_classes), where=row > 0)
    f1 = np.array([f1_score(p, r) for p, r in zip(precision, recall)])
    support = row.astype(np.int64)
    accuracy = float(diag.sum() / n) if n else 0.0
    weights = support / n if n else np.zeros(n_classes)
    return ClassReport(
        class_names=list(class_names),
        precision=precision, recall=recall, f1=f1, support=support,
        accuracy=accuracy,
        macro_precision=float(precision.mean()),
        macro_recall=float(recall.mean()),
        macro_f1=float(f1.mean()),
        weighted_precision=float((precision * weights).sum()),
        weighted_recall=float((recall * weights).sum()),
        weighted_f1=float((f1 * weights).sum()),
        confusion=matrix)


def render_report(report: ClassReport) -> str:
    """Plain-text rendering with the usual four-column layout at 2 dp."""
    width = max(12, max(len(name) for name in report.class_names) + 1)
    lines = [f"{'':<{width}}{'precision':>10}{'recall':>10}{'f1-score':>10}{'support':>10}", ""]
    for i, name in enumerate(report.class_names):
        lines.append(f"{name:<{width}}{report.precision[i]:>10.2f}"
                     f"{report.recall[i]:>10.2f}{report.f1[i]:>10.2f}"
                     f"{report.support[i]:>10d}")
    lines.append("")
    lines.append(f"{'accuracy':<{width}}{'':>10}{'':>10}"
                 f"{report.accuracy:>10.2f}{report.n:>10d}")
    lines.append(f"{'macro avg':<{width}}{report.macro_precision:>10.2f}"
                 f"{report.macro_recall:>10.2f}{report.macro_f1:>10.2f}"
                 f"{report.n:>10d}")
    lines.append(f"{'weighted avg':<{width}}{report.weighted_precision:>10.2f}"
                 f"{report.weighted_recall:>10.2f}{report.weighted_f1:>10.2f}"
                 f"{report.n:>10d}")
    return "\n".join(lines) + "\n"


def report_rows_csv(report: ClassReport) -> list[list[str]]:
    rows = [["class", "precision", "recall", "f1_score", "support"]]
    for i, name in enumerate(report.class_names):
        rows.append([name, f"{report.precision[i]:.6f}", f"{report.recall[i]:.6f}",
                     f"{report.f1[i]:.6f}", str(int(report.support[i]))])
    rows.append(["accuracy", "", "", f"{report.accuracy:.6f}", str(report.n)])
    rows.append(["macro_avg", f"{report.macro_precision:.6f}",
                 f"{report.macro_recall:.6f}", f"{report.macro_f1:.6f}", str(report.n)])
    rows.append(["weighted_avg", f"{report.weighted_precision:.6f}",
                 f"{report.weighted_recall:.6f}", f"{report.weighted_f1:.6f}", str(report.n)])
    return rows


def roc_auc(y_true, scores) -> float:
    """Binary AUC by the rank statistic with midrank tie handling."""
    y_true = np.asarray(y_true, dtype=np.int64)
    scores = np.asarray(scores, dtype=np.float64)
    if y_true.shape[0] != scores.shape[0]:
        raise LengthMismatch(f"{y_true.shape[0]} != {scores.shape[0]}")
    if not np.all(np.isfinite(scores)):
        raise ValueError("scores must be finite")
    n_pos = int((y_true == 1).sum())
    n_neg = int((y_true == 0).sum())
    if n_pos == 0 or n_neg == 0:
        raise SingleClass("both classes must be present")
    ranks = _midranks(scores)
    rank_sum = ranks[y_true == 1].sum()
    return float((rank_sum - n_pos * (n_pos + 1) / 2) / (n_pos * n_neg))


def _midranks(scores: np.ndarray) -> np.ndarray:
    order = np.argsort(scores, kind="mergesort")
    ranks = np.empty(scores.shape[0], dtype=np.float64)
    i = 0
    while i < scores.shape[0]:
        j = i
        while j + 1 < scores.shape[0] and scores[order[j + 1]] == scores[order[i]]:
            j += 1
        ranks[order[i:j + 1]] = (i + j) / 2 + 1
        i = j + 1
    return ranks


def roc_auc_ovr_macro(y_true, proba) -> float:
    """Unweighted mean of one-vs-rest binary AUCs."""
    y_true = np.asarray(y_true, dtype=np.int64)
    proba = np.asarray(proba, dtype=np.float64)
    aucs = []
    for k in range(proba.shape[1]):
        binary = (y_true == k).astype(np.int64)
        aucs.append(roc_auc(binary, proba[:, k]))
    return float(np.mean(aucs))


@dataclass
class CVConfig:
    k: int = 5
    seed: int = 0
    stratified: bool = True

    def __post_init__(self):
        if self.k < 2:
            raise ValueError("k must be >= 2")


@dataclass
class CVResult:
    fold_reports: list[ClassReport]
    mean_accuracy: float
    std_accuracy: float
    mean_macro_f1: float
    std_macro_f1: float


def stratified_folds(y, k: int, seed: int) -> list[np.ndarray]:
    """Validation index sets: per class, shuffled indices dealt round-robin
    across the k folds.  Folds partition all rows."""
    y = np.asarray(y, dtype=np.int64)
    rng = np.random.default_rng(seed)
    folds: list[list[int]] = [[] for _ in range(k)]
    for cls in np.unique(y):
        members = np.flatnonzero(y == cls)
        if members.shape[0] < k:
            raise ClassTooSmallForK(
                f"class {cls} has {members.shape[0]} rows, needs >= {k}")
        members = members[rng.permutation(members.shape[0])]
        for i, row in enumerate(members):
            folds[i % k].append(int(row))
    return [np.array(sorted(fold), dtype=np.int64) for fold in folds]


def kfold_cv(X, y, config: CVConfig, trainer,
             class_names: list[str] | None = None) -> CVResult:
    """Train on k-1 folds, report on the held-out fold, k times.

    `trainer` is any callable (X_train, y_train) -> model consumable by
    models.predict.
    """
    from . import models as _models
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    n_classes = int(y.max()) + 1
    names = class_names or [str(i) for i in range(n_classes)]
    folds = stratified_folds(y, config.k, config.seed)
    reports = []
    for fold in folds:
        mask = np.ones(y.shape[0], dtype=bool)
        mask[fold] = False
        model = trainer(X[mask], y[mask])
        pred = _models.predict(model, X[fold])
        reports.append(classification_report(y[fold], pred, names))
    acc = np.array([r.accuracy for r in reports])
    f1 = np.array([r.macro_f1 for r in reports])
    return CVResult(reports, float(acc.mean()), float(acc.std()),
                    float(f1.mean()), float(f1.std()))
