"""
Wikityp ML Training

Training, Persistenz und Vorhersage der One-vs-All Modelle.
"""

from __future__ import annotations

from collections.abc import Mapping, Sequence
from pathlib import Path

import numpy as np
import pandas as pd
import structlog
import yaml
from pydantic import BaseModel, Field, ValidationError, model_validator

from wikityp.config import TrainerConfig
from wikityp.corpus.dataset import DensityNormalizer
from wikityp.errors import DataError, FeatureMaskError
from wikityp.knowledge.schemas import DENSITY_COLUMN, LabelTask, parse_feature_column
from wikityp.ml.logistic import decision_function, sigmoid, train_logistic
from wikityp.ml.metrics import classification_scores, gmean_threshold, roc_auc

logger = structlog.get_logger(__name__)


class TrainedModel(BaseModel):
    """
    Logistisches Modell einer Aufgabe.

    features ist die Merkmalsmaske (Spaltennamen in Gewichtsreihenfolge),
    z.B. ["congestion:opt", "auto:initial", "density"].
    """

    task: LabelTask
    features: list[str] = Field(..., min_length=1)
    weights: list[float]
    bias: float
    threshold: float = Field(..., gt=0, lt=1)
    density: DensityNormalizer | None = None
    encoder_id: str = ""
    seed: int
    l2: float
    iterations: int = 0
    converged: bool = True
    train_metrics: dict[str, float] = Field(default_factory=dict)

    @model_validator(mode="after")
    def check_mask(self) -> TrainedModel:
        """Ein Gewicht pro Merkmal, gültige Spaltennamen."""
        if len(self.weights) != len(self.features):
            raise ValueError(f"{len(self.weights)} weights for {len(self.features)} features")
        for column in self.features:
            parse_feature_column(column)
        if DENSITY_COLUMN in self.features and self.density is None:
            raise ValueError("density feature requires normalization parameters")
        return self

    @property
    def keyline_stages(self) -> dict[str, str]:
        """Typologie -> Keyline-Stufe der verwendeten Features."""
        stages: dict[str, str] = {}
        for column in self.features:
            parsed = parse_feature_column(column)
            if parsed is not None:
                stages[parsed[0].value] = parsed[1].value
        return stages

    def select(self, features: pd.DataFrame | Mapping[str, float] | np.ndarray) -> np.ndarray:
        """
        Merkmalsmatrix in Maskenreihenfolge.

        Raises:
            FeatureMaskError: Spalte fehlt oder falsche Breite
        """
        if isinstance(features, pd.DataFrame):
            missing = [c for c in self.features if c not in features.columns]
            if missing:
                raise FeatureMaskError(f"model {self.task.value} needs columns {missing}")
            return features[self.features].to_numpy(dtype=np.float64)
        if isinstance(features, Mapping):
            missing = [c for c in self.features if c not in features]
            if missing:
                raise FeatureMaskError(f"model {self.task.value} needs features {missing}")
            return np.array([[features[c] for c in self.features]], dtype=np.float64)

        matrix = np.atleast_2d(np.asarray(features, dtype=np.float64))
        if matrix.shape[1] != len(self.features):
            raise FeatureMaskError(
                f"model {self.task.value} expects {len(self.features)} features, got {matrix.shape[1]}"
            )
        return matrix

    def decision(self, features: pd.DataFrame | Mapping[str, float] | np.ndarray) -> np.ndarray:
        """w·x + b."""
        return decision_function(self.select(features), np.asarray(self.weights), self.bias)

    def predict_proba(self, features: pd.DataFrame | Mapping[str, float] | np.ndarray) -> np.ndarray:
        """sigmoid(w·x + b) pro Zeile."""
        return sigmoid(self.decision(features))

    def predict_label(self, features: pd.DataFrame | Mapping[str, float] | np.ndarray) -> np.ndarray:
        """Label über die gespeicherte G-Mean-Schwelle."""
        return (self.predict_proba(features) > self.threshold).astype(np.int64)


def predict_proba(model: TrainedModel, x: Mapping[str, float] | np.ndarray) -> float:
    """Wahrscheinlichkeit für eine einzelne Stadt."""
    return float(model.predict_proba(x)[0])


def train_model(
    task: LabelTask,
    frame: pd.DataFrame,
    labels: Sequence[int],
    features: Sequence[str],
    *,
    trainer: TrainerConfig,
    seed: int,
    encoder_id: str = "",
    density: DensityNormalizer | None = None,
) -> TrainedModel:
    """
    Trainiert ein Modell auf den Zeilen von frame.

    Die Schwelle wird per G-Mean auf den Trainingsvorhersagen gewählt.

    Raises:
        FeatureMaskError: Spalte fehlt in frame
        TrainingError: nur eine Klasse
    """
    columns = list(features)
    missing = [c for c in columns if c not in frame.columns]
    if missing:
        raise FeatureMaskError(f"feature table lacks columns {missing}")

    X = frame[columns].to_numpy(dtype=np.float64)
    y = np.asarray(labels, dtype=np.int64)
    fit = train_logistic(
        X, y, l2=trainer.l2, tolerance=trainer.tolerance, max_iter=trainer.max_iter, solver=trainer.solver
    )
    probabilities = sigmoid(decision_function(X, fit.weights, fit.bias))
    chosen = gmean_threshold(probabilities, y)
    threshold = min(max(chosen.threshold, np.nextafter(0.0, 1.0)), np.nextafter(1.0, 0.0))
    scores = classification_scores(probabilities, y, threshold)

    model = TrainedModel(
        task=task,
        features=columns,
        weights=[float(w) for w in fit.weights],
        bias=fit.bias,
        threshold=float(threshold),
        density=density if DENSITY_COLUMN in columns else None,
        encoder_id=encoder_id,
        seed=seed,
        l2=fit.l2,
        iterations=fit.iterations,
        converged=fit.converged,
        train_metrics={
            "auc": roc_auc(probabilities, y),
            "gmean": chosen.gmean,
            "accuracy": scores.accuracy,
            "precision": scores.precision,
            "recall": scores.recall,
            "f1": scores.f1,
            "loss": fit.loss,
        },
    )
    logger.info(
        "model_trained",
        task=task.value,
        features=columns,
        train_auc=round(model.train_metrics["auc"], 4),
        iterations=fit.iterations,
    )
    return model


class ModelTrainer:
    """
    Modell-Verwaltung.

    Ein YAML-Dokument pro Aufgabe unter models_dir.
    """

    def __init__(self, models_dir: Path | str = "models") -> None:
        self.models_dir = Path(models_dir)
        self.models_dir.mkdir(parents=True, exist_ok=True)

    def path_for(self, task: LabelTask) -> Path:
        return self.models_dir / f"{task.value}.yaml"

    def save_model(self, model: TrainedModel) -> Path:
        """Speichert ein trainiertes Modell (Gleitkommazahlen in voller Präzision)."""
        path = self.path_for(model.task)
        with open(path, "w", encoding="utf-8") as f:
            yaml.safe_dump(model.model_dump(mode="json"), f, sort_keys=False, allow_unicode=True)
        logger.info("model_saved", task=model.task.value, path=str(path))
        return path

    def load_model(self, task: LabelTask) -> TrainedModel:
        """
        Lädt ein gespeichertes Modell.

        Raises:
            DataError: Datei fehlt oder ist ungültig
        """
        path = self.path_for(task)
        if not path.exists():
            logger.warning("model_not_found", task=task.value)
            raise DataError(f"model for task {task.value} not found at {path}")
        with open(path, encoding="utf-8") as f:
            raw = yaml.safe_load(f)
        try:
            return TrainedModel.model_validate(raw)
        except ValidationError as e:
            raise DataError(f"invalid model file {path}: {e}") from e

    def list_models(self) -> list[str]:
        """Listet alle verfügbaren Modelle."""
        return sorted(p.stem for p in self.models_dir.glob("*.yaml"))
