"""
Wikityp Corpus Models

Pydantic Models für Rohseiten, Städte und Datensatz-Splits.
"""

from __future__ import annotations

import hashlib
from datetime import datetime

from pydantic import BaseModel, Field, field_validator, model_validator

from wikityp.errors import DataError
from wikityp.knowledge.schemas import LabelTask, Typology


def sentences_hash(sentences: list[str]) -> str:
    """SHA-256 über eine Satzliste (je Satz + Zeilenumbruch)."""
    digest = hashlib.sha256()
    for sentence in sentences:
        digest.update(sentence.encode("utf-8"))
        digest.update(b"\n")
    return digest.hexdigest()


class RawPage(BaseModel):
    """
    Rohe Wikipedia-Seite wie aus dem Page-Cache gelesen.

    markup ist Wikitext (action=raw) oder bereits extrahierter Fließtext.
    """

    url: str
    markup: str
    fetched_at: datetime
    title: str | None = None

    @property
    def content_hash(self) -> str:
        """SHA-256 über das Markup (ohne Zeitstempel)."""
        return hashlib.sha256(self.markup.encode("utf-8")).hexdigest()


class InfoboxNumerics(BaseModel):
    """Numerische Infobox-Felder einer Stadt."""

    population: float | None = Field(default=None, gt=0)
    area_sq_mi: float | None = Field(default=None, gt=0)
    density_per_sq_mi: float | None = Field(default=None, gt=0)
    lat: float | None = Field(default=None, ge=-90, le=90)
    lon: float | None = Field(default=None, ge=-180, le=180)


class CityRecord(BaseModel):
    """
    Eine Stadt mit Sätzen, Infobox-Werten und optionalen Labels.

    Fehlt die Dichte, wird sie aus Einwohnern / Fläche abgeleitet.
    """

    city_id: str = Field(..., min_length=1)
    name: str
    url: str
    sentences: list[str] = Field(default_factory=list)
    population: float | None = Field(default=None, gt=0)
    area_sq_mi: float | None = Field(default=None, gt=0)
    density_per_sq_mi: float | None = Field(default=None, gt=0)
    lat: float | None = None
    lon: float | None = None
    typology_label: Typology | None = None
    via_city: bool | None = None

    @field_validator("sentences")
    @classmethod
    def validate_sentences(cls, v: list[str]) -> list[str]:
        """Keine leeren Sätze."""
        if any(not s.strip() for s in v):
            raise ValueError("sentences must not contain empty strings")
        return v

    @model_validator(mode="after")
    def derive_density(self) -> CityRecord:
        """Dichte aus Einwohnern / Fläche, wenn das Feld fehlt."""
        if self.density_per_sq_mi is None and self.population and self.area_sq_mi:
            self.density_per_sq_mi = self.population / self.area_sq_mi
        return self

    @property
    def sentences_hash(self) -> str:
        """SHA-256 über die Satzliste, Schlüssel für den Embedding-Cache."""
        return sentences_hash(self.sentences)

    def binary_label(self, task: LabelTask) -> int | None:
        """One-vs-All Label für eine Aufgabe, None wenn unbekannt."""
        if task is LabelTask.VIA:
            return None if self.via_city is None else int(self.via_city)
        if self.typology_label is None:
            return None
        return int(self.typology_label.value == task.value)


class DatasetSplit(BaseModel):
    """
    Train/Test-Aufteilung mit binären Labels für eine Aufgabe.

    Für die vier Typologie-Tasks sind train/test identisch,
    nur die Labels wechseln.
    """

    label_task: LabelTask
    train: list[str]
    test: list[str]
    labels: dict[str, int]
    seed: int

    @model_validator(mode="after")
    def check_disjoint(self) -> DatasetSplit:
        """train und test sind disjunkt, jede ID hat ein Label."""
        overlap = set(self.train) & set(self.test)
        if overlap:
            raise ValueError(f"train and test overlap: {sorted(overlap)[:5]}")
        missing = [cid for cid in (*self.train, *self.test) if cid not in self.labels]
        if missing:
            raise ValueError(f"ids without label: {missing[:5]}")
        return self

    def train_labels(self) -> list[int]:
        """Labels in train-Reihenfolge."""
        return [self.labels[cid] for cid in self.train]

    def test_labels(self) -> list[int]:
        """Labels in test-Reihenfolge."""
        return [self.labels[cid] for cid in self.test]

    def train_positives(self) -> list[str]:
        """Positive Städte im Train-Set."""
        return [cid for cid in self.train if self.labels[cid] == 1]
