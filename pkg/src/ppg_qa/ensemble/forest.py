"""Random forest trainer.

Each tree draws its own RNG stream seeded ``seed + tree_index``, consuming
it as: bootstrap indices first, then one feature subset per eligible node in
visit order. Trees are therefore independent of scheduling, and parallel and
serial training produce identical models.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass

import numpy as np

from ..errors import EmptyTrainingSet, SingleClassTraining
from .model import EnsembleModel, ModelKind, normalize_importances
from .tree import DecisionTree, grow_classification_tree


@dataclass(frozen=True)
class ForestParams:
    """Defaults mirror the usual published forest defaults: 100 trees, no
    depth cap, split nodes of two or more samples, ceil(sqrt(n_features))
    features per split (6 of 27)."""

    n_trees: int = 100
    max_depth: int | None = None
    min_samples_split: int = 2
    max_features: int | None = None

    def resolve_max_features(self, n_features: int) -> int:
        if self.max_features is not None:
            return min(self.max_features, n_features)
        return min(n_features, math.ceil(math.sqrt(n_features)))


def train_random_forest(
    X: np.ndarray,
    y: np.ndarray,
    params: ForestParams | None = None,
    seed: int = 0,
    max_workers: int = 1,
) -> EnsembleModel:
    """Fit bagged Gini trees; deterministic given (X, y, params, seed)."""
    X, y = _validate_training_data(X, y)
    params = params or ForestParams()
    n, n_features = X.shape
    max_features = params.resolve_max_features(n_features)

    def fit_tree(t: int) -> tuple[DecisionTree, np.ndarray]:
        rng = np.random.default_rng(seed + t)
        idx = _bootstrap_indices(rng, n)
        importance = np.zeros(n_features)
        tree = grow_classification_tree(
            X, y, idx,
            max_depth=params.max_depth,
            min_samples_split=params.min_samples_split,
            max_features=max_features,
            rng=rng,
            importance=importance,
        )
        return tree, importance

    indices = range(params.n_trees)
    if max_workers <= 1:
        fitted = [fit_tree(t) for t in indices]
    else:
        with ThreadPoolExecutor(max_workers=max_workers) as pool:
            fitted = list(pool.map(fit_tree, indices))

    trees = [t for t, _ in fitted]
    mean_importance = np.mean([imp for _, imp in fitted], axis=0)
    hyperparams = asdict(params)
    hyperparams.update(seed=seed, resolved_max_features=max_features)
    return EnsembleModel(
        kind=ModelKind.RANDOM_FOREST,
        trees=trees,
        n_features=n_features,
        feature_importances=normalize_importances(mean_importance),
        hyperparams=hyperparams,
    )


def oob_accuracy(model: EnsembleModel, X: np.ndarray, y: np.ndarray) -> float:
    """Out-of-bag accuracy, re-deriving each tree's bootstrap from its seed."""
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y)
    n = X.shape[0]
    seed = int(model.hyperparams["seed"])
    votes = np.zeros(n)
    counts = np.zeros(n, dtype=np.int64)
    for t, tree in enumerate(model.trees):
        rng = np.random.default_rng(seed + t)
        idx = _bootstrap_indices(rng, n)
        oob = np.ones(n, dtype=bool)
        oob[idx] = False
        if not oob.any():
            continue
        votes[oob] += tree.predict_value(X[oob])[:, 1]
        counts[oob] += 1
    scored = counts > 0
    if not scored.any():
        raise EmptyTrainingSet("no out-of-bag samples; too few trees")
    pred = (votes[scored] / counts[scored]) >= 0.5
    return float(np.mean(pred == (y[scored] == 1)))


def _bootstrap_indices(rng: np.random.Generator, n: int) -> np.ndarray:
    return rng.integers(0, n, size=n)


def _validate_training_data(X, y) -> tuple[np.ndarray, np.ndarray]:
    X = np.ascontiguousarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    if X.ndim != 2 or X.shape[0] != y.shape[0]:
        raise EmptyTrainingSet(
            f"X {X.shape} and y {y.shape} must be a matrix and matching labels"
        )
    if X.shape[0] < 2:
        raise EmptyTrainingSet(f"need >= 2 training rows, got {X.shape[0]}")
    classes = np.unique(y)
    if not np.all(np.isin(classes, (0, 1))):
        raise SingleClassTraining(f"labels must be 0/1, got {classes}")
    if len(classes) < 2:
        raise SingleClassTraining("training data contains a single class")
    return X, y
