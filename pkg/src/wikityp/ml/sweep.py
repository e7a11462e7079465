"""
Wikityp Feature Subset Sweep

Trainiert für eine Typologie alle 21 Merkmals-Teilmengen auf dem
Train-Set und bewertet sie auf dem Test-Set. Lift relativ zur
Anchor-Baseline (erste Zeile).
"""

from __future__ import annotations

from collections.abc import Sequence
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import pandas as pd
import structlog

from wikityp.config import TrainerConfig
from wikityp.errors import FeatureMaskError
from wikityp.knowledge.defaults import subset_layouts
from wikityp.knowledge.schemas import Typology
from wikityp.ml.logistic import decision_function, sigmoid, train_logistic
from wikityp.ml.metrics import roc_auc

logger = structlog.get_logger(__name__)

SWEEP_COLUMNS = ["row", "features", "n_features", "train_auc", "test_auc", "lift_pct", "best"]


@dataclass(frozen=True)
class SweepRow:
    """Ergebnis einer Teilmenge."""

    row: int
    features: tuple[str, ...]
    train_auc: float
    test_auc: float
    lift_pct: float
    best: bool = False

    @property
    def label(self) -> str:
        return " + ".join(self.features)


def evaluate_subset(
    features: Sequence[str],
    train_frame: pd.DataFrame,
    train_labels: np.ndarray,
    test_frame: pd.DataFrame,
    test_labels: np.ndarray,
    trainer: TrainerConfig,
) -> tuple[float, float]:
    """
    Trainiert eine Teilmenge und liefert (Train-AUC, Test-AUC).

    Raises:
        FeatureMaskError: Spalte fehlt
    """
    columns = list(features)
    for frame in (train_frame, test_frame):
        missing = [c for c in columns if c not in frame.columns]
        if missing:
            raise FeatureMaskError(f"feature variant missing: {missing}")

    X_train = train_frame[columns].to_numpy(dtype=np.float64)
    X_test = test_frame[columns].to_numpy(dtype=np.float64)
    fit = train_logistic(
        X_train,
        train_labels,
        l2=trainer.l2,
        tolerance=trainer.tolerance,
        max_iter=trainer.max_iter,
        solver=trainer.solver,
    )
    train_scores = sigmoid(decision_function(X_train, fit.weights, fit.bias))
    test_scores = sigmoid(decision_function(X_test, fit.weights, fit.bias))
    return roc_auc(train_scores, train_labels), roc_auc(test_scores, test_labels)


def subset_sweep(
    task: Typology,
    train_frame: pd.DataFrame,
    train_labels: Sequence[int],
    test_frame: pd.DataFrame,
    test_labels: Sequence[int],
    trainer: TrainerConfig,
) -> list[SweepRow]:
    """
    Alle 21 Teilmengen in Tabellenreihenfolge.

    Die beste Zeile (höchste Test-AUC, bei Gleichstand mehr Merkmale)
    ist mit best=True markiert.
    """
    y_train = np.asarray(train_labels, dtype=np.int64)
    y_test = np.asarray(test_labels, dtype=np.int64)

    results: list[tuple[tuple[str, ...], float, float]] = []
    for layout in subset_layouts(task):
        train_auc, test_auc = evaluate_subset(layout, train_frame, y_train, test_frame, y_test, trainer)
        results.append((layout, train_auc, test_auc))

    baseline = results[0][2]
    best_index = max(
        range(len(results)),
        key=lambda i: (results[i][2], len(results[i][0]), -i),
    )

    rows = [
        SweepRow(
            row=i,
            features=layout,
            train_auc=train_auc,
            test_auc=test_auc,
            lift_pct=0.0 if i == 0 else (test_auc - baseline) / baseline * 100.0,
            best=i == best_index,
        )
        for i, (layout, train_auc, test_auc) in enumerate(results)
    ]
    logger.info(
        "sweep_done",
        task=task.value,
        baseline_auc=round(baseline, 4),
        best_features=rows[best_index].label,
        best_auc=round(rows[best_index].test_auc, 4),
    )
    return rows


def best_subset(rows: Sequence[SweepRow]) -> tuple[str, ...]:
    """Merkmale der besten Zeile."""
    return next(r.features for r in rows if r.best)


def sweep_frame(rows: Sequence[SweepRow]) -> pd.DataFrame:
    """Sweep-Ergebnis als Tabelle."""
    return pd.DataFrame(
        [
            (r.row, r.label, len(r.features), r.train_auc, r.test_auc, r.lift_pct, r.best)
            for r in rows
        ],
        columns=SWEEP_COLUMNS,
    )


def save_sweep(path: Path | str, rows: Sequence[SweepRow]) -> Path:
    """Sweep-Bericht als CSV."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    sweep_frame(rows).to_csv(path, index=False, lineterminator="\n")
    return path


def load_sweep(path: Path | str) -> list[SweepRow]:
    """Liest einen Sweep-Bericht."""
    frame = pd.read_csv(path)
    return [
        SweepRow(
            row=int(r.row),
            features=tuple(f.strip() for f in str(r.features).split(" + ")),
            train_auc=float(r.train_auc),
            test_auc=float(r.test_auc),
            lift_pct=float(r.lift_pct),
            best=bool(r.best),
        )
        for r in frame.itertuples(index=False)
    ]
