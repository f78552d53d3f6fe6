"""Tree-ensemble classifiers: a random forest and a Newton-boosted ensemble."""

from .boosting import BoostParams, log_loss, staged_train_log_loss, train_gradient_boosted
from .forest import ForestParams, oob_accuracy, train_random_forest
from .model import (
    DEFAULT_THRESHOLD,
    MODEL_FORMAT_VERSION,
    EnsembleModel,
    ModelKind,
    PredictionResult,
    Reason,
    feature_importance,
    load_model,
    model_from_doc,
    model_to_json,
    predict,
    predict_proba,
    save_model,
    too_few_beats_prediction,
)
from .tree import DecisionTree, best_split_gini, best_split_newton, gini_impurity

__all__ = [
    "BoostParams",
    "DecisionTree",
    "DEFAULT_THRESHOLD",
    "EnsembleModel",
    "ForestParams",
    "MODEL_FORMAT_VERSION",
    "ModelKind",
    "PredictionResult",
    "Reason",
    "best_split_gini",
    "best_split_newton",
    "feature_importance",
    "gini_impurity",
    "load_model",
    "log_loss",
    "model_from_doc",
    "model_to_json",
    "oob_accuracy",
    "predict",
    "predict_proba",
    "save_model",
    "staged_train_log_loss",
    "too_few_beats_prediction",
    "train_gradient_boosted",
    "train_random_forest",
]
