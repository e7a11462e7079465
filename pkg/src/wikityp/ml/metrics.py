"""
Wikityp Metrics

ROC-AUC (Rangformulierung), G-Mean-Schwelle und Klassifikationsmaße.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Literal

import numpy as np
import pandas as pd
import structlog
from sklearn.metrics import confusion_matrix, precision_recall_fscore_support

from wikityp.errors import UndefinedMetricError

logger = structlog.get_logger(__name__)


def _as_arrays(scores: np.ndarray, labels: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    s = np.asarray(scores, dtype=np.float64).ravel()
    y = np.asarray(labels).astype(np.int64).ravel()
    if s.shape != y.shape:
        raise ValueError(f"{s.shape[0]} scores but {y.shape[0]} labels")
    if not np.all((y == 0) | (y == 1)):
        raise ValueError("labels must be 0 or 1")
    return s, y


def _require_both_classes(y: np.ndarray, metric: str) -> tuple[int, int]:
    n_pos = int(y.sum())
    n_neg = int(y.size - n_pos)
    if n_pos == 0 or n_neg == 0:
        raise UndefinedMetricError(f"{metric} is undefined with a single class")
    return n_pos, n_neg


def roc_auc(scores: np.ndarray, labels: np.ndarray) -> float:
    """
    P(Score_pos > Score_neg) + 1/2 P(Gleichstand).

    Über die Rangsumme der Positiven (Mann-Whitney U), Gleichstände
    bekommen den mittleren Rang.

    Raises:
        UndefinedMetricError: nur eine Klasse
    """
    s, y = _as_arrays(scores, labels)
    n_pos, n_neg = _require_both_classes(y, "AUC")
    ranks = pd.Series(s).rank(method="average").to_numpy()
    u = float(ranks[y == 1].sum()) - n_pos * (n_pos + 1) / 2.0
    return u / (n_pos * n_neg)


@dataclass(frozen=True)
class GMeanThreshold:
    """Gewählte Schwelle mit ihren Raten."""

    threshold: float
    gmean: float
    tpr: float
    tnr: float


def threshold_candidates(scores: np.ndarray) -> np.ndarray:
    """Mittelpunkte aufeinanderfolgender verschiedener Scores (aufsteigend)."""
    unique = np.unique(np.asarray(scores, dtype=np.float64))
    if unique.size == 1:
        return unique
    return (unique[:-1] + unique[1:]) / 2.0


def gmean_threshold(scores: np.ndarray, labels: np.ndarray) -> GMeanThreshold:
    """
    Schwelle mit maximalem sqrt(TPR * TNR); bei Gleichstand die kleinste.

    Vorhersage positiv wenn Score > Schwelle.

    Raises:
        UndefinedMetricError: nur eine Klasse
    """
    s, y = _as_arrays(scores, labels)
    n_pos, n_neg = _require_both_classes(y, "G-mean")

    candidates = threshold_candidates(s)
    pos_sorted = np.sort(s[y == 1])
    neg_sorted = np.sort(s[y == 0])
    tp = n_pos - np.searchsorted(pos_sorted, candidates, side="right")
    tn = np.searchsorted(neg_sorted, candidates, side="right")
    tpr = tp / n_pos
    tnr = tn / n_neg
    gmeans = np.sqrt(tpr * tnr)

    best = int(np.argmax(gmeans))
    return GMeanThreshold(
        threshold=float(candidates[best]),
        gmean=float(gmeans[best]),
        tpr=float(tpr[best]),
        tnr=float(tnr[best]),
    )


@dataclass(frozen=True)
class ClassificationScores:
    """Accuracy, Precision, Recall, F1 und die Konfusionsmatrix."""

    accuracy: float
    precision: float
    recall: float
    f1: float
    tp: int
    fp: int
    fn: int
    tn: int
    average: str = "binary"

    def as_dict(self) -> dict[str, float | int | str]:
        return {
            "accuracy": self.accuracy,
            "precision": self.precision,
            "recall": self.recall,
            "f1": self.f1,
            "tp": self.tp,
            "fp": self.fp,
            "fn": self.fn,
            "tn": self.tn,
            "average": self.average,
        }


def classification_scores(
    scores: np.ndarray,
    labels: np.ndarray,
    threshold: float,
    average: Literal["binary", "weighted"] = "binary",
) -> ClassificationScores:
    """
    Klassifikationsmaße bei gegebener Schwelle.

    average="binary" bewertet die Positivklasse, "weighted" mittelt beide
    Klassen nach Häufigkeit. Precision ohne vorhergesagte Positive ist 0.
    """
    s, y = _as_arrays(scores, labels)
    if not math.isfinite(threshold) or not 0.0 < threshold < 1.0:
        raise ValueError(f"threshold must lie in (0, 1), got {threshold}")

    predicted = (s > threshold).astype(np.int64)
    tn, fp, fn, tp = (int(v) for v in confusion_matrix(y, predicted, labels=[0, 1]).ravel())
    if tp + fp == 0:
        logger.warning("precision_undefined", reason="no predicted positives", threshold=threshold)

    precision, recall, f1, _ = precision_recall_fscore_support(
        y, predicted, labels=[0, 1] if average == "weighted" else None,
        average=average, pos_label=1, zero_division=0,
    )
    return ClassificationScores(
        accuracy=(tp + tn) / y.size,
        precision=float(precision),
        recall=float(recall),
        f1=float(f1),
        tp=tp,
        fp=fp,
        fn=fn,
        tn=tn,
        average=average,
    )
