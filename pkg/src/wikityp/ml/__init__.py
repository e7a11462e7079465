"""ML Module - Logistische Regression, Metriken, Modelle, Sweep, Feasibility."""

from wikityp.ml.feasibility import (
    ContingencyTable,
    FeasibilityResult,
    ViaDataset,
    bayes_ratio,
    train_feasibility_model,
)
from wikityp.ml.logistic import LogisticFit, train_logistic
from wikityp.ml.metrics import (
    ClassificationScores,
    GMeanThreshold,
    classification_scores,
    gmean_threshold,
    roc_auc,
)
from wikityp.ml.sweep import SweepRow, subset_sweep
from wikityp.ml.training import ModelTrainer, TrainedModel, predict_proba, train_model

__all__ = [
    "ClassificationScores",
    "ContingencyTable",
    "FeasibilityResult",
    "GMeanThreshold",
    "LogisticFit",
    "ModelTrainer",
    "SweepRow",
    "TrainedModel",
    "ViaDataset",
    "bayes_ratio",
    "classification_scores",
    "gmean_threshold",
    "predict_proba",
    "roc_auc",
    "subset_sweep",
    "train_feasibility_model",
    "train_logistic",
    "train_model",
]
