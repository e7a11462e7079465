"""
Wikityp Keyline Expansion

Greedy Erweiterung eines Keyline-Sets: für e = 0..N wird das Set
Anchor + die ersten e Kandidaten per wiederholter, stratifizierter
Kreuzvalidierung auf dem Train-Set bewertet. Die übrigen drei
Typologie-Features stammen nur aus ihren Anchor-Texten. Ein größeres
e wird nur bei echter Verbesserung der mittleren Validierungs-AUC
übernommen.
"""

from __future__ import annotations

from collections.abc import Mapping
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
import structlog
from sklearn.model_selection import RepeatedStratifiedKFold

from wikityp.config import CVConfig, TrainerConfig
from wikityp.corpus.dataset import DensityNormalizer
from wikityp.corpus.models import DatasetSplit
from wikityp.embeddings.similarity import EmbeddingMatrix
from wikityp.errors import DataError, MissingEmbeddingError
from wikityp.keylines.features import keyline_feature, keyline_maxima
from wikityp.keylines.schemas import AnchorText, CandidateList, KeylineSet
from wikityp.knowledge.defaults import TYPOLOGY_ORDER
from wikityp.knowledge.schemas import KeylineStage, Typology
from wikityp.ml.logistic import decision_function, sigmoid, train_logistic
from wikityp.ml.metrics import roc_auc

logger = structlog.get_logger(__name__)

Fold = tuple[np.ndarray, np.ndarray]


@dataclass(frozen=True)
class TrajectoryPoint:
    """Mittlere Validierungs-AUC nach e Kandidaten."""

    expansion: int
    mean_auc: float
    lift_pct: float


@dataclass(frozen=True)
class ExpansionResult:
    """Optimales Set, volles Set und der Verlauf."""

    typology: Typology
    optimal: KeylineSet
    all_candidates: KeylineSet
    trajectory: tuple[TrajectoryPoint, ...]
    max_expansion: int
    fold_seed: int

    @property
    def baseline_auc(self) -> float:
        return self.trajectory[0].mean_auc

    @property
    def best_auc(self) -> float:
        return self.trajectory[self.max_expansion].mean_auc


# =============================================================================
# Cross Validation
# =============================================================================


def _degenerate(y: np.ndarray, folds: list[Fold]) -> bool:
    for train_idx, val_idx in folds:
        if np.unique(y[train_idx]).size < 2 or np.unique(y[val_idx]).size < 2:
            return True
    return False


def cv_folds(
    labels: np.ndarray,
    *,
    folds: int,
    repeats: int,
    seed: int,
    max_reshuffles: int = 10,
) -> tuple[list[Fold], int]:
    """
    Stratifizierte Fold-Zuordnung, folds x repeats.

    Enthält ein Fold nur eine Klasse, wird mit seed+1 neu gemischt.

    Returns:
        (Folds in fester Reihenfolge, verwendeter Seed)

    Raises:
        DataError: zu wenige Beispiele einer Klasse oder kein gültiger Seed
    """
    y = np.asarray(labels, dtype=np.int64)
    smallest = int(min(y.sum(), y.size - y.sum()))
    if smallest < folds:
        raise DataError(f"smallest class has {smallest} examples, need at least {folds} for {folds}-fold CV")

    placeholder = np.zeros((y.size, 1))
    for attempt in range(max_reshuffles + 1):
        used_seed = seed + attempt
        splitter = RepeatedStratifiedKFold(n_splits=folds, n_repeats=repeats, random_state=used_seed)
        assignment = [(tr, va) for tr, va in splitter.split(placeholder, y)]
        if not _degenerate(y, assignment):
            return assignment, used_seed
        logger.warning("cv_fold_degenerate", seed=used_seed)

    raise DataError(f"no non-degenerate fold assignment after {max_reshuffles} reshuffles")


def fold_auc(X: np.ndarray, y: np.ndarray, fold: Fold, trainer: TrainerConfig) -> float:
    """Trainiert auf dem Train-Teil und bewertet den Validierungs-Teil."""
    train_idx, val_idx = fold
    fit = train_logistic(
        X[train_idx],
        y[train_idx],
        l2=trainer.l2,
        tolerance=trainer.tolerance,
        max_iter=trainer.max_iter,
        solver=trainer.solver,
    )
    scores = sigmoid(decision_function(X[val_idx], fit.weights, fit.bias))
    return roc_auc(scores, y[val_idx])


def cross_validated_auc(
    X: np.ndarray, y: np.ndarray, folds: list[Fold], trainer: TrainerConfig, n_jobs: int = 1
) -> float:
    """Mittlere Validierungs-AUC über alle Folds, reduziert in Fold-Reihenfolge."""
    if n_jobs > 1:
        with ThreadPoolExecutor(max_workers=n_jobs) as pool:
            aucs = list(pool.map(lambda fold: fold_auc(X, y, fold, trainer), folds))
    else:
        aucs = [fold_auc(X, y, fold, trainer) for fold in folds]
    return float(np.mean(aucs))


# =============================================================================
# Expansion
# =============================================================================


def _matrix(matrices: Mapping[str, EmbeddingMatrix], city_id: str) -> EmbeddingMatrix:
    try:
        return matrices[city_id]
    except KeyError:
        raise MissingEmbeddingError(f"no embeddings for city {city_id}") from None


def expand_keylines(
    task: Typology,
    candidates: CandidateList,
    anchors: Mapping[Typology, AnchorText],
    split: DatasetSplit,
    matrices: Mapping[str, EmbeddingMatrix],
    *,
    cv: CVConfig,
    trainer: TrainerConfig,
    seed: int,
    densities: Mapping[str, float | None] | None = None,
) -> ExpansionResult:
    """
    Greedy Keyline-Erweiterung für eine Typologie.

    Kandidaten werden einmal auf dem ganzen Train-Set erzeugt; jedes
    Präfix wird auf denselben Folds bewertet.

    Raises:
        DataError: keine Kandidaten, falsche Aufgabe, zu kleine Klassen
        MissingEmbeddingError: Train-Stadt ohne Embeddings
    """
    if split.label_task.typology is not task:
        raise DataError(f"split labels belong to {split.label_task.value}, not {task.value}")
    if len(candidates) == 0:
        raise DataError(f"no candidates for {task.value}")

    train_ids = list(split.train)
    y = np.asarray(split.train_labels(), dtype=np.int64)
    folds, fold_seed = cv_folds(
        y, folds=cv.folds, repeats=cv.repeats, seed=seed, max_reshuffles=cv.max_reshuffles
    )

    anchor_set = KeylineSet.from_anchor(anchors[task])
    all_set = anchor_set.extended(candidates.entries, KeylineStage.ALL)

    # Spalte e = Feature mit Anchor + ersten e Kandidaten
    maxima = np.vstack([keyline_maxima(_matrix(matrices, cid), all_set) for cid in train_ids])
    prefix_features = np.maximum.accumulate(maxima, axis=1)

    columns: list[np.ndarray | None] = []
    for typology in TYPOLOGY_ORDER:
        if typology is task:
            columns.append(None)
            continue
        singleton = KeylineSet.from_anchor(anchors[typology])
        columns.append(
            np.array([keyline_feature(_matrix(matrices, cid), singleton) for cid in train_ids])
        )
    if cv.include_density:
        density_map = densities or {}
        normalizer = DensityNormalizer.fit(density_map.get(cid) for cid in train_ids)
        columns.append(normalizer.transform_many(density_map.get(cid) for cid in train_ids))

    def design(e: int) -> np.ndarray:
        return np.column_stack(
            [prefix_features[:, e] if column is None else column for column in columns]
        )

    trajectory: list[TrajectoryPoint] = []
    best_auc = -np.inf
    max_expansion = 0
    baseline = 0.0
    for e in range(len(candidates) + 1):
        mean_auc = cross_validated_auc(design(e), y, folds, trainer, cv.n_jobs)
        if e == 0:
            baseline = mean_auc
        lift = (mean_auc - baseline) / baseline * 100.0 if baseline > 0 else 0.0
        trajectory.append(TrajectoryPoint(expansion=e, mean_auc=mean_auc, lift_pct=lift))
        logger.debug("expansion_step", typology=task.value, e=e, mean_auc=round(mean_auc, 4))
        if mean_auc > best_auc:
            best_auc = mean_auc
            max_expansion = e

    optimal = anchor_set.extended(candidates.entries[:max_expansion], KeylineStage.OPTIMAL)
    logger.info(
        "expansion_done",
        typology=task.value,
        candidates=len(candidates),
        max_expansion=max_expansion,
        baseline_auc=round(baseline, 4),
        best_auc=round(best_auc, 4),
        fold_seed=fold_seed,
    )
    return ExpansionResult(
        typology=task,
        optimal=optimal,
        all_candidates=all_set,
        trajectory=tuple(trajectory),
        max_expansion=max_expansion,
        fold_seed=fold_seed,
    )
