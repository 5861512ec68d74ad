"""Preprocessing: calendar features, imputation, cost-per-unit, one-hot
encoding, standard scaling, and the stratified train/test split.

Rows are plain dicts keyed by the 13 dataset columns; the fitted
preprocessor turns them into a dense numeric FeatureMatrix whose manifest
names the provenance of every output column.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from datetime import datetime, timezone

import numpy as np

from .timeutil import parse_iso

NUMERIC_FIELDS = ("electricity_quantity", "price_per_mwh", "total_cost",
                  "latency_ms", "cost_per_unit", "zt_authentication")
CATEGORICAL_FIELDS = ("user_role", "transaction_type", "security_level",
                      "encryption_method", "network_slice_id", "hour",
                      "day_of_week", "month")
TYPE_TIE_ORDER = ("Buy", "Sell", "Unknown")


class PipelineError(Exception):
    pass


class AllMissing(PipelineError):
    pass


class ClassTooSmall(PipelineError):
    pass


class EmptyTrain(PipelineError):
    pass


class AlreadyTransformed(PipelineError):
    pass


def extract_time_features(timestamp) -> tuple[int, int, int]:
    """(hour, day_of_week, month) with Monday = 0."""
    if isinstance(timestamp, str):
        timestamp = parse_iso(timestamp)
    dt = datetime.fromtimestamp(int(timestamp), tz=timezone.utc)
    return dt.hour, dt.weekday(), dt.month


def compute_cost_per_unit(total_cost: float, electricity_quantity: float) -> float:
    """total_cost / quantity with the division-by-zero guard returning 0."""
    if electricity_quantity == 0:
        return 0.0
    return total_cost / electricity_quantity


def impute_transaction_type(rows: list[dict], mode: str | None = None) -> list[dict]:
    """Fill missing transaction_type with the (training) mode.

    Ties between counts resolve in the order Buy < Sell < Unknown.
    """
    if mode is None:
        counts = {name: 0 for name in TYPE_TIE_ORDER}
        for row in rows:
            value = row.get("transaction_type")
            if value:
                counts[value] = counts.get(value, 0) + 1
        if sum(counts.values()) == 0:
            raise AllMissing("transaction_type is missing in every row")
        best = max(counts.values())
        mode = next(name for name in TYPE_TIE_ORDER if counts.get(name, 0) == best)
    out = []
    for row in rows:
        if row.get("transaction_type"):
            out.append(row)
        else:
            fixed = dict(row)
            fixed["transaction_type"] = mode
            out.append(fixed)
    return out


def stratified_split(labels, test_fraction: float,
                     seed: int) -> tuple[np.ndarray, np.ndarray]:
    """(train_indices, test_indices) with per-class test counts of
    round(class_count * fraction), adjusted so the total is exactly
    round(n * fraction).  Deterministic under the seed; the two sides are
    disjoint and cover every row."""
    if not 0 < test_fraction < 1:
        raise ValueError("test_fraction must be in (0, 1)")
    labels = np.asarray(labels)
    n = labels.shape[0]
    classes, class_of = np.unique(labels, return_inverse=True)
    counts = np.bincount(class_of, minlength=classes.shape[0])
    if counts.size == 0 or counts.min() < 2:
        raise ClassTooSmall("every class needs at least 2 rows")
    target_total = round(n * test_fraction)
    exact = counts * test_fraction
    take = np.array([round(v) for v in exact], dtype=np.int64)
    # nudge per-class counts until the total matches, moving whichever class
    # is furthest from its exact share (ties to the lowest class index)
    while take.sum() > target_total:
        over = take - exact
        over[take == 0] = -np.inf
        take[int(np.argmax(over))] -= 1
    while take.sum() < target_total:
        under = exact - take
        under[take == counts] = -np.inf
        take[int(np.argmax(under))] += 1
    rng = np.random.default_rng(seed)
    test_mask = np.zeros(n, dtype=bool)
    for k in range(classes.shape[0]):
        members = np.flatnonzero(class_of == k)
        members = members[rng.permutation(members.shape[0])]
        test_mask[members[:take[k]]] = True
    return np.flatnonzero(~test_mask), np.flatnonzero(test_mask)


@dataclass
class FeatureMatrix:
    X: np.ndarray
    manifest: list[str]
    transformed: bool = True


@dataclass
class FittedPreprocessor:
    """Scaler statistics and categorical vocabularies, fitted on training
    rows only.  Immutable after fit apart from the unseen-category counter."""

    numeric_mean: np.ndarray = field(default_factory=lambda: np.zeros(0))
    numeric_std: np.ndarray = field(default_factory=lambda: np.zeros(0))
    vocabularies: dict = field(default_factory=dict)
    impute_mode: str = "Buy"
    label_vocab: list[str] = field(default_factory=list)
    manifest: list[str] = field(default_factory=list)
    unseen_counts: dict = field(default_factory=dict)

    def transform(self, rows: list[dict]) -> FeatureMatrix:
        if isinstance(rows, FeatureMatrix):
            raise AlreadyTransformed("rows were already transformed")
        rows = impute_transaction_type(rows, self.impute_mode)
        n = len(rows)
        numeric = np.zeros((n, len(NUMERIC_FIELDS)))
        for i, row in enumerate(rows):
            numeric[i] = _numeric_vector(row)
        std = np.where(self.numeric_std > 0, self.numeric_std, 1.0)
        mean = np.where(self.numeric_std > 0, self.numeric_mean, 0.0)
        numeric = (numeric - mean) / std

        blocks = [numeric]
        for column in CATEGORICAL_FIELDS:
            vocab = self.vocabularies[column]
            index = {value: j for j, value in enumerate(vocab)}
            onehot = np.zeros((n, len(vocab)))
            for i, row in enumerate(rows):
                value = _categorical_value(row, column)
                j = index.get(value)
                if j is None:
                    self.unseen_counts[column] = self.unseen_counts.get(column, 0) + 1
                else:
                    onehot[i, j] = 1.0
            blocks.append(onehot)
        return FeatureMatrix(np.hstack(blocks), list(self.manifest))

    def encode_labels(self, rows: list[dict]) -> np.ndarray:
        index = {name: i for i, name in enumerate(self.label_vocab)}
        return np.array([index[row["transaction_status"]] for row in rows],
                        dtype=np.int64)


def _numeric_vector(row: dict) -> np.ndarray:
    cost_per_unit = compute_cost_per_unit(float(row["total_cost"]),
                                          float(row["electricity_quantity"]))
    return np.array([
        float(row["electricity_quantity"]),
        float(row["price_per_mwh"]),
        float(row["total_cost"]),
        float(row["latency_ms"]),
        cost_per_unit,
        float(row["zt_authentication"]),
    ])


def _categorical_value(row: dict, column: str) -> str:
    if column in ("hour", "day_of_week", "month"):
        hour, dow, month = extract_time_features(row["timestamp"])
        return str({"hour": hour, "day_of_week": dow, "month": month}[column])
    return str(row[column])


def fit_preprocessor(train_rows: list[dict]) -> FittedPreprocessor:
    """Fit scaler statistics and vocabularies on the training rows only."""
    if not train_rows:
        raise EmptyTrain("no training rows")
    pre = FittedPreprocessor()
    counts = {name: 0 for name in TYPE_TIE_ORDER}
    for row in train_rows:
        value = row.get("transaction_type")
        if value:
            counts[value] = counts.get(value, 0) + 1
    if sum(counts.values()) == 0:
        raise AllMissing("transaction_type is missing in every row")
    best = max(counts.values())
    pre.impute_mode = next(n for n in TYPE_TIE_ORDER if counts.get(n, 0) == best)

    rows = impute_transaction_type(train_rows, pre.impute_mode)
    numeric = np.array([_numeric_vector(row) for row in rows])
    pre.numeric_mean = numeric.mean(axis=0)
    pre.numeric_std = numeric.std(axis=0)

    for column in CATEGORICAL_FIELDS:
        values = {_categorical_value(row, column) for row in rows}
        if column in ("hour", "day_of_week", "month"):
            vocab = sorted(values, key=int)
        else:
            vocab = sorted(values)
        pre.vocabularies[column] = vocab

    pre.label_vocab = sorted({row["transaction_status"] for row in rows})
    pre.manifest = [f"num:{name}" for name in NUMERIC_FIELDS]
    for column in CATEGORICAL_FIELDS:
        pre.manifest.extend(f"cat:{column}={value}"
                            for value in pre.vocabularies[column])
    return pre


def fit_transform(train_rows: list[dict]) -> tuple[FittedPreprocessor, FeatureMatrix]:
    pre = fit_preprocessor(train_rows)
    return pre, pre.transform(train_rows)


def save_feature_matrix(matrix: FeatureMatrix, path) -> None:
    """CSV whose header is the manifest: one column per feature with its
    provenance (source field, category value)."""
    import csv as _csv
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = _csv.writer(fh)
        writer.writerow(matrix.manifest)
        for row in matrix.X:
            writer.writerow([repr(float(v)) for v in row])


def load_feature_matrix(path) -> FeatureMatrix:
    import csv as _csv
    with open(path, newline="", encoding="utf-8") as fh:
        reader = _csv.reader(fh)
        manifest = next(reader)
        X = np.array([[float(v) for v in row] for row in reader])
    return FeatureMatrix(X, manifest)


def preprocessor_to_json(pre: FittedPreprocessor) -> dict:
    return {
        "numeric_mean": pre.numeric_mean.tolist(),
        "numeric_std": pre.numeric_std.tolist(),
        "vocabularies": pre.vocabularies,
        "impute_mode": pre.impute_mode,
        "label_vocab": pre.label_vocab,
        "manifest": pre.manifest,
    }


def preprocessor_from_json(obj: dict) -> FittedPreprocessor:
    return FittedPreprocessor(
        numeric_mean=np.array(obj["numeric_mean"], dtype=np.float64),
        numeric_std=np.array(obj["numeric_std"], dtype=np.float64),
        vocabularies=dict(obj["vocabularies"]),
        impute_mode=obj["impute_mode"],
        label_vocab=list(obj["label_vocab"]),
        manifest=list(obj["manifest"]))
