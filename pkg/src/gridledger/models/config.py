"""Training configuration shared by the three classifier families."""

from __future__ import annotations

from dataclasses import dataclass, replace

MODEL_KINDS = ("logreg", "forest", "gbt")


@dataclass
class TrainConfig:
    model_kind: str = "gbt"
    n_estimators: int = 100
    max_iterations: int = 1000          # logistic only
    learning_rate: float | None = None  # default 0.3 for gbt, 0.1 for logreg
    max_depth: int | None = None        # default 6 for gbt, unlimited for forest
    min_samples_leaf: int = 1
    l2_lambda: float | None = None      # default 1.0 for gbt, 0.0 for logreg
    feature_subset: str | None = "sqrt" # forest split candidates; None = all
    bootstrap: bool = True              # forest only
    random_state: int = 0

    def __post_init__(self):
        if self.model_kind not in MODEL_KINDS:
            raise ValueError(f"unknown model kind {self.model_kind!r}")
        if self.n_estimators < 1 or self.max_iterations < 1 or self.min_samples_leaf < 1:
            raise ValueError("counts must be >= 1")
        if self.learning_rate is not None and not (0 < self.learning_rate <= 1):
            raise ValueError("learning_rate must be in (0, 1]")
        if self.l2_lambda is not None and self.l2_lambda < 0:
            raise ValueError("l2_lambda must be non-negative")

    def resolved_learning_rate(self) -> float:
        if self.learning_rate is not None:
            return self.learning_rate
        return 0.3 if self.model_kind == "gbt" else 0.1

    def resolved_l2_lambda(self) -> float:
        if self.l2_lambda is not None:
            return self.l2_lambda
        return 1.0 if self.model_kind == "gbt" else 0.0

    def resolved_max_depth(self) -> int:
        if self.max_depth is not None:
            return self.max_depth
        return 6 if self.model_kind == "gbt" else -1

    def with_kind(self, kind: str) -> "TrainConfig":
        return replace(self, model_kind=kind)


def default_config(kind: str, random_state: int = 0) -> TrainConfig:
    return TrainConfig(model_kind=kind, random_state=random_state)
