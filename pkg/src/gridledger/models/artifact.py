"""Single-file JSON serialization of trained models.

The artifact stores the training config, the structure (weights or flat
tree arrays), and a hash of the feature manifest it was trained on; loading
against a matrix with a different manifest is refused.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass

import numpy as np

from .boosting import BoostedEnsemble, BoostedRegressor, RegressionTree
from .config import TrainConfig
from .forest import Forest
from .linear import LinearModel
from .tree import DecisionTree


class ManifestMismatch(ValueError):
    pass


@dataclass
class ModelArtifact:
    model: object
    config: TrainConfig
    manifest_hash: str


def manifest_hash(manifest: list[str]) -> str:
    blob = json.dumps(list(manifest), sort_keys=False).encode("utf-8")
    return hashlib.sha256(blob).hexdigest()


def _tree_to_json(tree) -> dict:
    out = {
        "feature": tree.feature.tolist(),
        "threshold": tree.threshold.tolist(),
        "left": tree.left.tolist(),
        "right": tree.right.tolist(),
    }
    if isinstance(tree, DecisionTree):
        out["hist"] = tree.hist.tolist()
    else:
        out["value"] = tree.value.tolist()
    return out


def _classification_tree_from_json(obj: dict, n_features: int) -> DecisionTree:
    return DecisionTree(
        np.array(obj["feature"], dtype=np.int64),
        np.array(obj["threshold"], dtype=np.float64),
        np.array(obj["left"], dtype=np.int64),
        np.array(obj["right"], dtype=np.int64),
        np.array(obj["hist"], dtype=np.float64),
        n_features)


def _regression_tree_from_json(obj: dict) -> RegressionTree:
    return RegressionTree(
        np.array(obj["feature"], dtype=np.int64),
        np.array(obj["threshold"], dtype=np.float64),
        np.array(obj["left"], dtype=np.int64),
        np.array(obj["right"], dtype=np.int64),
        np.array(obj["value"], dtype=np.float64))


def model_to_json(model) -> dict:
    if isinstance(model, LinearModel):
        return {"kind": "logreg", "weights": model.weights.tolist(),
                "biases": model.biases.tolist()}
    if isinstance(model, Forest):
        return {"kind": "forest", "n_classes": model.n_classes,
                "n_features": model.n_features,
                "trees": [_tree_to_json(t) for t in model.trees]}
    if isinstance(model, BoostedEnsemble):
        return {"kind": "gbt", "base_scores": model.base_scores.tolist(),
                "learning_rate": model.learning_rate,
                "n_features": model.n_features,
                "rounds": [[_tree_to_json(t) for t in rnd]
                           for rnd in model.trees]}
    if isinstance(model, BoostedRegressor):
        return {"kind": "gbt_regressor", "base_score": model.base_score,
                "learning_rate": model.learning_rate,
                "n_features": model.n_features,
                "trees": [_tree_to_json(t) for t in model.trees]}
    raise TypeError(f"cannot serialize {type(model).__name__}")


def model_from_json(obj: dict):
    kind = obj["kind"]
    if kind == "logreg":
        return LinearModel(np.array(obj["weights"], dtype=np.float64),
                           np.array(obj["biases"], dtype=np.float64))
    if kind == "forest":
        trees = [_classification_tree_from_json(t, obj["n_features"])
                 for t in obj["trees"]]
        return Forest(trees, obj["n_classes"], obj["n_features"])
    if kind == "gbt":
        rounds = [[_regression_tree_from_json(t) for t in rnd]
                  for rnd in obj["rounds"]]
        return BoostedEnsemble(np.array(obj["base_scores"], dtype=np.float64),
                               rounds, obj["learning_rate"], obj["n_features"])
    if kind == "gbt_regressor":
        trees = [_regression_tree_from_json(t) for t in obj["trees"]]
        return BoostedRegressor(obj["base_score"], trees,
                                obj["learning_rate"], obj["n_features"])
    raise ValueError(f"unknown model kind {kind!r}")


def save_artifact(path, model, config: TrainConfig, manifest: list[str]) -> None:
    doc = {
        "config": asdict(config),
        "feature_manifest_hash": manifest_hash(manifest),
        "model": model_to_json(model),
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, sort_keys=True, separators=(",", ":"))


def load_artifact(path, manifest: list[str] | None = None) -> ModelArtifact:
    with open(path, encoding="utf-8") as fh:
        doc = json.load(fh)
    stored_hash = doc["feature_manifest_hash"]
    if manifest is not None and manifest_hash(manifest) != stored_hash:
        raise ManifestMismatch(
            "model artifact was trained on a different feature manifest")
    return ModelArtifact(model_from_json(doc["model"]),
                         TrainConfig(**doc["config"]), stored_hash)
