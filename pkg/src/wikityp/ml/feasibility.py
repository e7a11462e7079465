"""
Wikityp Feasibility

Via-Städte und Verkehrstypologien: bedingte Verhältnisse
P(V|T) / P(V|¬T) aus Zähltabellen und ein logistisches
Via-Modell über den Wikipedia-Features.
"""

from __future__ import annotations

from collections.abc import Iterable, Sequence
from dataclasses import dataclass, field

import numpy as np
import pandas as pd
import structlog

from wikityp.config import TrainerConfig
from wikityp.corpus.dataset import DensityNormalizer
from wikityp.corpus.models import CityRecord
from wikityp.errors import DataError, UndefinedRatioError
from wikityp.knowledge.defaults import TYPOLOGY_ORDER
from wikityp.knowledge.schemas import (
    DENSITY_COLUMN,
    KeylineStage,
    LabelTask,
    Typology,
    feature_column,
)
from wikityp.ml.metrics import roc_auc
from wikityp.ml.training import TrainedModel, train_model

logger = structlog.get_logger(__name__)

FEASIBILITY_FEATURES: list[str] = [
    *(feature_column(t, KeylineStage.OPTIMAL) for t in TYPOLOGY_ORDER),
    DENSITY_COLUMN,
]

RATIO_COLUMNS = [
    "typology",
    "ratio",
    "via_typology",
    "nonvia_typology",
    "via_other",
    "nonvia_other",
    "undefined_cell",
]


# =============================================================================
# Contingency Tables
# =============================================================================


@dataclass(frozen=True)
class ContingencyTable:
    """Via / nicht Via × Typologie / andere Typologie."""

    typology: Typology
    via_typology: int
    nonvia_typology: int
    via_other: int
    nonvia_other: int

    def __post_init__(self) -> None:
        for name in ("via_typology", "nonvia_typology", "via_other", "nonvia_other"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0")

    @property
    def n_typology(self) -> int:
        return self.via_typology + self.nonvia_typology

    @property
    def n_other(self) -> int:
        return self.via_other + self.nonvia_other

    @property
    def total(self) -> int:
        return self.n_typology + self.n_other

    def scaled(self, factor: int) -> ContingencyTable:
        """Alle Zellen mit factor multipliziert."""
        return ContingencyTable(
            typology=self.typology,
            via_typology=self.via_typology * factor,
            nonvia_typology=self.nonvia_typology * factor,
            via_other=self.via_other * factor,
            nonvia_other=self.nonvia_other * factor,
        )

    def swapped(self) -> ContingencyTable:
        """Typologie und Rest vertauscht."""
        return ContingencyTable(
            typology=self.typology,
            via_typology=self.via_other,
            nonvia_typology=self.nonvia_other,
            via_other=self.via_typology,
            nonvia_other=self.nonvia_typology,
        )

    @classmethod
    def from_records(cls, records: Iterable[CityRecord], typology: Typology) -> ContingencyTable:
        """
        Zählt Städte mit bekanntem Typologie-Label und Via-Flag.

        Raises:
            DataError: Stadt ohne Label oder Via-Flag
        """
        cells = {"via_typology": 0, "nonvia_typology": 0, "via_other": 0, "nonvia_other": 0}
        for record in records:
            if record.typology_label is None or record.via_city is None:
                raise DataError(f"city {record.city_id} lacks typology label or via flag")
            side = "typology" if record.typology_label is typology else "other"
            prefix = "via" if record.via_city else "nonvia"
            cells[f"{prefix}_{side}"] += 1
        return cls(typology=typology, **cells)


def bayes_ratio(table: ContingencyTable) -> float:
    """
    P(V|T) / P(V|¬T) direkt aus den Zählwerten.

    Raises:
        UndefinedRatioError: ein Nenner ist null (Zelle im Fehler benannt)
    """
    if table.n_typology == 0:
        raise UndefinedRatioError(f"no {table.typology.value} cities in table", cell="n(T)")
    if table.n_other == 0:
        raise UndefinedRatioError(f"no non-{table.typology.value} cities in table", cell="n(not T)")
    if table.via_other == 0:
        raise UndefinedRatioError(
            f"no via cities outside {table.typology.value}", cell="n(V and not T)"
        )
    return (table.via_typology / table.n_typology) / (table.via_other / table.n_other)


@dataclass
class ViaDataset:
    """Städte mit Via-Flag, üblicherweise nur das Train-Set."""

    records: list[CityRecord]
    tables: dict[Typology, ContingencyTable] = field(init=False)

    def __post_init__(self) -> None:
        self.tables = {t: ContingencyTable.from_records(self.records, t) for t in TYPOLOGY_ORDER}

    @classmethod
    def from_split(cls, records: dict[str, CityRecord], city_ids: Sequence[str]) -> ViaDataset:
        """Nur Städte aus city_ids mit Typologie-Label und bekanntem Via-Flag."""
        subset = [
            records[c]
            for c in city_ids
            if records[c].typology_label is not None and records[c].via_city is not None
        ]
        if len(subset) < len(city_ids):
            logger.info("via_ratio_cities_skipped", count=len(city_ids) - len(subset))
        return cls(records=subset)

    def ratio_report(self) -> pd.DataFrame:
        """Tabelle (typology, ratio, Zellen); undefinierte Verhältnisse mit Zellname."""
        rows = []
        for typology in TYPOLOGY_ORDER:
            table = self.tables[typology]
            try:
                ratio: float | None = bayes_ratio(table)
                cell = ""
            except UndefinedRatioError as e:
                logger.warning("bayes_ratio_undefined", typology=typology.value, cell=e.cell)
                ratio, cell = None, e.cell
            rows.append(
                (
                    typology.value,
                    ratio,
                    table.via_typology,
                    table.nonvia_typology,
                    table.via_other,
                    table.nonvia_other,
                    cell,
                )
            )
        return pd.DataFrame(rows, columns=RATIO_COLUMNS)


# =============================================================================
# Feasibility Model
# =============================================================================


@dataclass(frozen=True)
class FeasibilityResult:
    """Via-Modell mit AUCs und Koeffizienten."""

    model: TrainedModel
    train_auc: float
    test_auc: float

    @property
    def coefficients(self) -> dict[str, float]:
        values = dict(zip(self.model.features, self.model.weights))
        values["intercept"] = self.model.bias
        return values

    def as_dict(self) -> dict[str, object]:
        return {
            "train_auc": self.train_auc,
            "test_auc": self.test_auc,
            "coefficients": self.coefficients,
            "threshold": self.model.threshold,
        }


def train_feasibility_model(
    train_frame: pd.DataFrame,
    train_labels: Sequence[int],
    test_frame: pd.DataFrame,
    test_labels: Sequence[int],
    *,
    trainer: TrainerConfig,
    seed: int,
    encoder_id: str = "",
    density: DensityNormalizer | None = None,
    features: Sequence[str] = FEASIBILITY_FEATURES,
) -> FeasibilityResult:
    """
    Logistisches Via-Modell auf den Train-Zeilen, bewertet auf Train und Test.

    Raises:
        FeatureMaskError: Spalte fehlt
        TrainingError: nur eine Klasse im Train-Set
        UndefinedMetricError: nur eine Klasse im Test-Set
    """
    model = train_model(
        LabelTask.VIA,
        train_frame,
        train_labels,
        features,
        trainer=trainer,
        seed=seed,
        encoder_id=encoder_id,
        density=density,
    )
    y_test = np.asarray(test_labels, dtype=np.int64)
    test_auc = roc_auc(model.predict_proba(test_frame), y_test)
    result = FeasibilityResult(model=model, train_auc=model.train_metrics["auc"], test_auc=test_auc)
    logger.info(
        "feasibility_trained",
        train_auc=round(result.train_auc, 4),
        test_auc=round(test_auc, 4),
    )
    return result
