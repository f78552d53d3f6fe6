"""Ensemble model container, prediction, explanation and JSON round-trip."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

import numpy as np

from ..data_io import QualityLabel
from ..errors import CorruptModel, DimensionMismatch, UnsupportedVersion
from .tree import DecisionTree

MODEL_FORMAT_VERSION = 1

DEFAULT_THRESHOLD = 0.5


class ModelKind(Enum):
    RANDOM_FOREST = "random_forest"
    GRADIENT_BOOSTED = "gradient_boosted"


class Reason(Enum):
    MODEL = "model"
    TOO_FEW_BEATS = "too_few_beats"


@dataclass(frozen=True)
class PredictionResult:
    label: QualityLabel
    score: float
    reason: Reason = Reason.MODEL


@dataclass
class EnsembleModel:
    kind: ModelKind
    trees: list[DecisionTree]
    n_features: int
    feature_importances: np.ndarray
    hyperparams: dict
    base_score: float = 0.0
    format_version: int = MODEL_FORMAT_VERSION
    # per-round training log-loss for boosted models; not serialized
    train_log_loss: list[float] | None = field(default=None, compare=False)

    def describe(self) -> str:
        return f"{self.kind.value}(trees={len(self.trees)})"


def predict_proba(model: EnsembleModel, X: np.ndarray) -> np.ndarray:
    """Probability of Good for every row of ``X``."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim == 1:
        X = X[None, :]
    if X.shape[1] != model.n_features:
        raise DimensionMismatch(
            f"model expects {model.n_features} features, got {X.shape[1]}"
        )
    if not np.all(np.isfinite(X)):
        raise DimensionMismatch("feature matrix contains non-finite values")
    if model.kind is ModelKind.RANDOM_FOREST:
        acc = np.zeros(X.shape[0])
        for tree in model.trees:
            acc += tree.predict_value(X)[:, 1]
        return acc / len(model.trees)
    logit = np.full(X.shape[0], model.base_score)
    lr = float(model.hyperparams.get("learning_rate", 1.0))
    for tree in model.trees:
        logit += lr * tree.predict_value(X)
    return 1.0 / (1.0 + np.exp(-logit))


def predict(model: EnsembleModel, x, threshold: float = DEFAULT_THRESHOLD) -> PredictionResult:
    """Classify one feature vector; Good iff score >= threshold."""
    values = getattr(x, "values", x)
    score = float(predict_proba(model, np.asarray(values, dtype=np.float64))[0])
    label = QualityLabel.GOOD if score >= threshold else QualityLabel.BAD
    return PredictionResult(label=label, score=score)


def too_few_beats_prediction() -> PredictionResult:
    """The fixed Bad verdict for windows that could not be segmented."""
    return PredictionResult(label=QualityLabel.BAD, score=0.0,
                            reason=Reason.TOO_FEW_BEATS)


def feature_importance(model: EnsembleModel) -> np.ndarray:
    """Per-feature importances, normalized to sum to 1 (or all zero)."""
    return model.feature_importances.copy()


def normalize_importances(raw: np.ndarray) -> np.ndarray:
    total = float(raw.sum())
    if total <= 0.0:
        return np.zeros_like(raw)
    return raw / total


def save_model(model: EnsembleModel, path: str | Path, meta: dict | None = None) -> None:
    Path(path).write_text(model_to_json(model, meta))


def model_to_json(model: EnsembleModel, meta: dict | None = None) -> str:
    doc = {
        "format_version": model.format_version,
        "kind": model.kind.value,
        "n_features": model.n_features,
        "base_score": model.base_score,
        "trees": [_tree_to_doc(t) for t in model.trees],
        "importances": model.feature_importances.tolist(),
        "hyperparams": model.hyperparams,
    }
    if meta is not None:
        doc["_meta"] = meta
    return json.dumps(doc)


def load_model(path: str | Path) -> EnsembleModel:
    """Parse and structurally validate a serialized model.

    A wrong ``format_version`` raises UnsupportedVersion; any other schema
    violation (truncation, missing keys, malformed trees) raises
    CorruptModel. A loaded model predicts identically to the saved one.
    """
    try:
        doc = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise CorruptModel(f"cannot parse model file {path}: {exc}") from exc
    return model_from_doc(doc)


def model_from_doc(doc: dict) -> EnsembleModel:
    if not isinstance(doc, dict):
        raise CorruptModel("model document is not an object")
    try:
        version = doc["format_version"]
    except KeyError:
        raise CorruptModel("missing format_version") from None
    if version != MODEL_FORMAT_VERSION:
        raise UnsupportedVersion(
            f"format_version {version!r}; this build reads {MODEL_FORMAT_VERSION}"
        )
    try:
        kind = ModelKind(doc["kind"])
        n_features = int(doc["n_features"])
        base_score = float(doc["base_score"])
        tree_docs = doc["trees"]
        importances = np.asarray(doc["importances"], dtype=np.float64)
        hyperparams = doc["hyperparams"]
    except (KeyError, ValueError, TypeError) as exc:
        raise CorruptModel(f"bad model document: {exc}") from exc

    if n_features <= 0:
        raise CorruptModel("n_features must be positive")
    if not isinstance(tree_docs, list):
        raise CorruptModel("trees must be a list")
    if kind is ModelKind.RANDOM_FOREST and not tree_docs:
        raise CorruptModel("a forest needs at least one tree")
    if importances.shape != (n_features,) or not np.all(np.isfinite(importances)):
        raise CorruptModel("importances must be n_features finite reals")
    if np.any(importances < 0):
        raise CorruptModel("importances must be nonnegative")
    total = float(importances.sum())
    if total != 0.0 and not math.isclose(total, 1.0, abs_tol=1e-9):
        raise CorruptModel(f"importances sum to {total}, expected 1 or 0")

    leaf_width = 2 if kind is ModelKind.RANDOM_FOREST else 1
    trees = [_tree_from_doc(td, n_features, leaf_width) for td in tree_docs]
    return EnsembleModel(
        kind=kind,
        trees=trees,
        n_features=n_features,
        feature_importances=importances,
        hyperparams=hyperparams,
        base_score=base_score,
    )


def _tree_to_doc(tree: DecisionTree) -> dict:
    return {
        "feature_index": tree.feature_index.tolist(),
        "threshold": tree.threshold.tolist(),
        "left": tree.left.tolist(),
        "right": tree.right.tolist(),
        "leaf_value": tree.leaf_value.tolist(),
        "max_depth_reached": tree.max_depth_reached,
    }


def _tree_from_doc(doc: dict, n_features: int, leaf_width: int) -> DecisionTree:
    try:
        feature = np.asarray(doc["feature_index"], dtype=np.int64)
        threshold = np.asarray(doc["threshold"], dtype=np.float64)
        left = np.asarray(doc["left"], dtype=np.int64)
        right = np.asarray(doc["right"], dtype=np.int64)
        leaf = np.asarray(doc["leaf_value"], dtype=np.float64)
        depth = int(doc.get("max_depth_reached", 0))
    except (KeyError, ValueError, TypeError) as exc:
        raise CorruptModel(f"bad tree document: {exc}") from exc

    n = len(feature)
    if n == 0 or any(len(a) != n for a in (threshold, left, right, leaf)):
        raise CorruptModel("tree arrays empty or of mismatched lengths")
    expected_shape = (n, 2) if leaf_width == 2 else (n,)
    if leaf.shape != expected_shape:
        raise CorruptModel(f"leaf_value shape {leaf.shape}, expected {expected_shape}")
    if not np.all(np.isfinite(threshold)) or not np.all(np.isfinite(leaf)):
        raise CorruptModel("non-finite threshold or leaf value")
    if np.any(feature >= n_features) or np.any(feature < -1):
        raise CorruptModel("feature_index out of range")

    internal = feature >= 0
    if np.any(internal & ((left < 0) | (right < 0))):
        raise CorruptModel("internal node with missing child")
    if np.any(~internal & ((left != -1) | (right != -1))):
        raise CorruptModel("leaf node with children")
    children = np.concatenate([left[internal], right[internal]])
    if children.size:
        if np.any(children >= n):
            raise CorruptModel("child index out of bounds")
        if len(np.unique(children)) != children.size or np.any(children == 0):
            raise CorruptModel("node referenced more than once or root referenced")
    if children.size != n - 1:
        raise CorruptModel("tree is not a single connected binary tree")
    seen = np.zeros(n, dtype=bool)
    stack = [0]
    while stack:
        node = stack.pop()
        if seen[node]:
            raise CorruptModel("cycle detected in tree")
        seen[node] = True
        if feature[node] >= 0:
            stack.append(int(left[node]))
            stack.append(int(right[node]))
    if not seen.all():
        raise CorruptModel("unreachable nodes in tree")
    return DecisionTree(
        feature_index=feature, threshold=threshold, left=left, right=right,
        leaf_value=leaf, max_depth_reached=depth,
    )
