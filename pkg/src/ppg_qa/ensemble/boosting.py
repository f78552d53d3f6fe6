"""Newton-boosted trees on logistic loss.

Per round: with current probabilities p, fit a depth-limited regression
tree to gradients g = p - y and hessians h = p (1 - p); leaves contribute
-sum(g) / (sum(h) + lambda), scaled by the learning rate, to the logit. The
prior is the log-odds of the positive class. With lr <= 1 and lambda >= 0
the training log-loss is non-increasing round over round; the trainer
records it per round for the callers that assert this.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from .forest import _validate_training_data
from .model import EnsembleModel, ModelKind, normalize_importances
from .tree import grow_regression_tree

_P_EPS = 1e-15


@dataclass(frozen=True)
class BoostParams:
    """Defaults mirror the usual published boosting defaults: 100 rounds of
    depth-6 trees, learning rate 0.3, L2 leaf regularization 1.0, no split
    penalty."""

    n_rounds: int = 100
    max_depth: int = 6
    learning_rate: float = 0.3
    reg_lambda: float = 1.0
    gamma_split: float = 0.0
    min_samples_split: int = 2


def train_gradient_boosted(
    X: np.ndarray,
    y: np.ndarray,
    params: BoostParams | None = None,
    seed: int = 0,
) -> EnsembleModel:
    """Fit the boosted ensemble; no subsampling, so the fit is deterministic
    (``seed`` is recorded for interface parity with the forest trainer)."""
    X, y = _validate_training_data(X, y)
    params = params or BoostParams()
    n, n_features = X.shape

    p_good = float(np.mean(y))
    base_score = float(np.log(p_good / (1.0 - p_good)))
    logit = np.full(n, base_score)
    yf = y.astype(np.float64)

    trees = []
    importance = np.zeros(n_features)
    losses: list[float] = []
    for _ in range(params.n_rounds):
        p = 1.0 / (1.0 + np.exp(-logit))
        g = p - yf
        h = p * (1.0 - p)
        tree = grow_regression_tree(
            X, g, h,
            max_depth=params.max_depth,
            min_samples_split=params.min_samples_split,
            reg_lambda=params.reg_lambda,
            gamma_split=params.gamma_split,
            importance=importance,
        )
        trees.append(tree)
        logit = logit + params.learning_rate * tree.predict_value(X)
        losses.append(log_loss(yf, 1.0 / (1.0 + np.exp(-logit))))

    hyperparams = asdict(params)
    hyperparams.update(seed=seed)
    return EnsembleModel(
        kind=ModelKind.GRADIENT_BOOSTED,
        trees=trees,
        n_features=n_features,
        feature_importances=normalize_importances(importance),
        hyperparams=hyperparams,
        base_score=base_score,
        train_log_loss=losses,
    )


def log_loss(y: np.ndarray, p: np.ndarray) -> float:
    p = np.clip(p, _P_EPS, 1.0 - _P_EPS)
    return float(-np.mean(y * np.log(p) + (1.0 - y) * np.log(1.0 - p)))


def staged_train_log_loss(model: EnsembleModel, X: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Training log-loss after each boosting round, recomputed from the
    final model (prefix sums of tree contributions)."""
    X = np.ascontiguousarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    lr = float(model.hyperparams["learning_rate"])
    logit = np.full(X.shape[0], model.base_score)
    out = np.empty(len(model.trees))
    for r, tree in enumerate(model.trees):
        logit = logit + lr * tree.predict_value(X)
        out[r] = log_loss(y, 1.0 / (1.0 + np.exp(-logit)))
    return out
