"""Grid and random hyperparameter search over TrainConfig fields.

Candidates are scored by mean stratified k-fold macro F1; ties keep the
earlier candidate, so results are reproducible for a fixed space and seed.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, replace

import numpy as np

from ..evaluation import CVConfig, kfold_cv
from .config import TrainConfig


class EmptySpace(ValueError):
    pass


@dataclass
class SearchResult:
    best_config: TrainConfig
    best_score: float
    table: list[tuple[dict, float]]   # (overrides, mean macro F1) per candidate


def _expand_grid(space: dict) -> list[dict]:
    if not space:
        raise EmptySpace("empty search space")
    keys = list(space.keys())
    combos = []
    for values in itertools.product(*(space[k] for k in keys)):
        combos.append(dict(zip(keys, values)))
    return combos


def _evaluate(base: TrainConfig, overrides: dict, folds: int,
              X: np.ndarray, y: np.ndarray, trainer, seed: int) -> float:
    config = replace(base, **overrides)
    result = kfold_cv(X, y, CVConfig(k=folds, seed=seed),
                      lambda Xt, yt: trainer(Xt, yt, config))
    return float(np.mean([r.macro_f1 for r in result.fold_reports]))


def grid_search(space: dict, folds: int, X: np.ndarray, y: np.ndarray,
                trainer, base: TrainConfig | None = None,
                seed: int = 0) -> SearchResult:
    base = base or TrainConfig()
    table = []
    best = None
    for overrides in _expand_grid(space):
        score = _evaluate(base, overrides, folds, X, y, trainer, seed)
        table.append((overrides, score))
        if best is None or score > best[1]:
            best = (overrides, score)
    return SearchResult(replace(base, **best[0]), best[1], table)


def random_search(space: dict, n_draws: int, folds: int, X: np.ndarray,
                  y: np.ndarray, trainer, base: TrainConfig | None = None,
                  seed: int = 0) -> SearchResult:
    if not space:
        raise EmptySpace("empty search space")
    base = base or TrainConfig()
    rng = np.random.default_rng(seed)
    keys = list(space.keys())
    table = []
    best = None
    for _ in range(n_draws):
        overrides = {k: space[k][int(rng.integers(0, len(space[k])))]
                     for k in keys}
        score = _evaluate(base, overrides, folds, X, y, trainer, seed)
        table.append((overrides, score))
        if best is None or score > best[1]:
            best = (overrides, score)
    return SearchResult(replace(base, **best[0]), best[1], table)
