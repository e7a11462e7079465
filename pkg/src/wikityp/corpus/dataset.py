"""
Wikityp Dataset

Datensatz-Tabelle, Satz- und Infobox-Dateien, Via-Liste,
Train/Test-Split und Dichte-Normalisierung.
"""

from __future__ import annotations

import json
import math
from collections.abc import Iterable, Sequence
from pathlib import Path

import numpy as np
import pandas as pd
import structlog
from pydantic import BaseModel, Field
from sklearn.model_selection import train_test_split

from wikityp.corpus.fetch import normalize_url
from wikityp.corpus.models import CityRecord, DatasetSplit, InfoboxNumerics
from wikityp.errors import ConfigurationError, DataError
from wikityp.knowledge.schemas import LabelTask, Typology

logger = structlog.get_logger(__name__)

DATASET_COLUMNS = ("city_id", "name", "url", "label", "via_flag", "lat", "lon")
INFOBOX_COLUMNS = ("city_id", "population", "area_sq_mi", "density_per_sq_mi", "lat", "lon")

_TRUE = {"1", "true", "yes", "y", "via"}
_FALSE = {"0", "false", "no", "n"}


# =============================================================================
# Dataset Table
# =============================================================================


def _optional_float(value: str) -> float | None:
    value = value.strip()
    if not value:
        return None
    try:
        return float(value)
    except ValueError:
        return None


def _optional_flag(value: str, city_id: str) -> bool | None:
    value = value.strip().lower()
    if not value:
        return None
    if value in _TRUE:
        return True
    if value in _FALSE:
        return False
    raise DataError(f"invalid via_flag {value!r} for city {city_id}")


def _optional_label(value: str, city_id: str) -> Typology | None:
    value = value.strip().lower()
    if not value:
        return None
    try:
        return Typology(value)
    except ValueError as e:
        raise DataError(f"invalid typology label {value!r} for city {city_id}") from e


def load_dataset(path: Path | str) -> list[CityRecord]:
    """
    Lädt die Datensatz-Tabelle (CSV mit Header).

    Pflichtspalten: city_id, name, url. label, via_flag, lat, lon sind optional.

    Raises:
        DataError: fehlende Spalten, doppelte IDs, ungültige Labels
    """
    path = Path(path)
    if not path.exists():
        raise DataError(f"dataset file not found: {path}")

    frame = pd.read_csv(path, dtype=str, keep_default_na=False, encoding="utf-8")
    missing = [c for c in ("city_id", "name", "url") if c not in frame.columns]
    if missing:
        raise DataError(f"dataset {path} lacks columns {missing}")
    for column in DATASET_COLUMNS:
        if column not in frame.columns:
            frame[column] = ""

    duplicated = frame["city_id"][frame["city_id"].duplicated()].tolist()
    if duplicated:
        raise DataError(f"duplicate city_id in {path}: {duplicated[:5]}")

    records = [
        CityRecord(
            city_id=row.city_id.strip(),
            name=row.name.strip(),
            url=row.url.strip(),
            typology_label=_optional_label(row.label, row.city_id),
            via_city=_optional_flag(row.via_flag, row.city_id),
            lat=_optional_float(row.lat),
            lon=_optional_float(row.lon),
        )
        for row in frame.itertuples(index=False)
    ]
    logger.info("dataset_loaded", path=str(path), cities=len(records))
    return records


def write_dataset(path: Path | str, records: Iterable[CityRecord]) -> Path:
    """Schreibt eine Datensatz-Tabelle im Ladeformat."""
    rows = [
        {
            "city_id": r.city_id,
            "name": r.name,
            "url": r.url,
            "label": r.typology_label.value if r.typology_label else "",
            "via_flag": "" if r.via_city is None else str(int(r.via_city)),
            "lat": "" if r.lat is None else repr(r.lat),
            "lon": "" if r.lon is None else repr(r.lon),
        }
        for r in records
    ]
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    pd.DataFrame(rows, columns=list(DATASET_COLUMNS)).to_csv(path, index=False, lineterminator="\n")
    return path


# =============================================================================
# Sentences / Infobox Files
# =============================================================================


def write_sentences(path: Path | str, records: Iterable[CityRecord]) -> Path:
    """Eine JSON-Zeile pro Satz: city_id, sentence_index, text."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        for record in records:
            for index, text in enumerate(record.sentences):
                line = {"city_id": record.city_id, "sentence_index": index, "text": text}
                f.write(json.dumps(line, ensure_ascii=False, sort_keys=True) + "\n")
    return path


def read_sentences(path: Path | str) -> dict[str, list[str]]:
    """
    Liest die Satzdatei.

    Raises:
        DataError: Lücke in sentence_index
    """
    grouped: dict[str, dict[int, str]] = {}
    with open(path, encoding="utf-8") as f:
        for line in f:
            if not line.strip():
                continue
            entry = json.loads(line)
            grouped.setdefault(entry["city_id"], {})[int(entry["sentence_index"])] = entry["text"]

    result: dict[str, list[str]] = {}
    for city_id, by_index in grouped.items():
        if sorted(by_index) != list(range(len(by_index))):
            raise DataError(f"sentence indices of {city_id} are not contiguous")
        result[city_id] = [by_index[i] for i in range(len(by_index))]
    return result


def write_infobox_table(path: Path | str, numerics: dict[str, InfoboxNumerics]) -> Path:
    """Infobox-Werte als CSV, eine Zeile pro Stadt."""
    rows = [{"city_id": cid, **values.model_dump()} for cid, values in numerics.items()]
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    pd.DataFrame(rows, columns=list(INFOBOX_COLUMNS)).to_csv(path, index=False, lineterminator="\n")
    return path


def read_infobox_table(path: Path | str) -> dict[str, InfoboxNumerics]:
    """Liest die Infobox-Tabelle."""
    frame = pd.read_csv(path, dtype={"city_id": str})
    result: dict[str, InfoboxNumerics] = {}
    for row in frame.to_dict(orient="records"):
        values = {
            k: (None if v is None or (isinstance(v, float) and math.isnan(v)) else float(v))
            for k, v in row.items()
            if k != "city_id"
        }
        result[str(row["city_id"])] = InfoboxNumerics(**values)
    return result


def attach_corpus(
    records: Sequence[CityRecord],
    sentences: dict[str, list[str]],
    numerics: dict[str, InfoboxNumerics] | None = None,
) -> list[CityRecord]:
    """
    Hängt Sätze und Infobox-Werte an die Datensatz-Einträge.

    Koordinaten aus der Datensatz-Tabelle haben Vorrang vor der Infobox.
    """
    numerics = numerics or {}
    merged: list[CityRecord] = []
    for record in records:
        box = numerics.get(record.city_id, InfoboxNumerics())
        merged.append(
            CityRecord(
                **record.model_dump(
                    exclude={"sentences", "population", "area_sq_mi", "density_per_sq_mi", "lat", "lon"}
                ),
                sentences=sentences.get(record.city_id, []),
                population=box.population,
                area_sq_mi=box.area_sq_mi,
                density_per_sq_mi=box.density_per_sq_mi,
                lat=record.lat if record.lat is not None else box.lat,
                lon=record.lon if record.lon is not None else box.lon,
            )
        )
    return merged


# =============================================================================
# Via List
# =============================================================================


def load_via_list(path: Path | str) -> list[tuple[str, str]]:
    """
    Liest die Via-Liste: eine Stadt pro Zeile, 'Name URL'.

    Leerzeilen und Zeilen mit '#' werden übersprungen.
    """
    entries: list[tuple[str, str]] = []
    with open(path, encoding="utf-8") as f:
        for number, line in enumerate(f, start=1):
            stripped = line.strip()
            if not stripped or stripped.startswith("#"):
                continue
            parts = stripped.rsplit(maxsplit=1)
            if len(parts) != 2 or not parts[1].startswith("http"):
                raise DataError(f"via list line {number} lacks a URL: {stripped!r}")
            entries.append((parts[0].strip(), parts[1]))
    return entries


def apply_via_list(
    records: Sequence[CityRecord], entries: Sequence[tuple[str, str]]
) -> list[CityRecord]:
    """
    Setzt via_city über URL-Abgleich. Städte nicht auf der Liste sind Nicht-Via.
    """
    via_urls = {normalize_url(url) for _, url in entries}
    matched = {normalize_url(r.url) for r in records} & via_urls
    unmatched = len(via_urls) - len(matched)
    if unmatched:
        logger.warning("via_entries_unmatched", count=unmatched)
    return [
        r.model_copy(update={"via_city": normalize_url(r.url) in via_urls})
        for r in records
    ]


# =============================================================================
# Split
# =============================================================================


def build_split(
    records: Sequence[CityRecord],
    label_task: LabelTask,
    train_fraction: float,
    seed: int,
    *,
    stratify: bool = False,
) -> DatasetSplit:
    """
    Deterministischer Train/Test-Split mit One-vs-All Labels.

    Für die Typologie-Tasks hängt der Split nur von den Typologie-Labels
    und dem Seed ab, alle vier Tasks teilen ihn. Stratifiziert wird auf
    die volle Typologie (Via-Task: auf das Via-Flag).

    Raises:
        DataError: keine gelabelten Einträge oder kein Positiv im Train-Set
    """
    if label_task is LabelTask.VIA:
        eligible = [r for r in records if r.via_city is not None]
    else:
        eligible = [r for r in records if r.typology_label is not None]
    eligible.sort(key=lambda r: r.city_id)

    n = len(eligible)
    if n < 2:
        raise DataError(f"need at least 2 labeled records for task {label_task.value}, got {n}")
    n_train = min(max(int(round(train_fraction * n)), 1), n - 1)
    ids = [r.city_id for r in eligible]

    if stratify:
        strata = [
            str(r.via_city) if label_task is LabelTask.VIA else r.typology_label.value  # type: ignore[union-attr]
            for r in eligible
        ]
        train_ids, test_ids = train_test_split(
            ids, train_size=n_train, random_state=seed, shuffle=True, stratify=strata
        )
        train, test = list(train_ids), list(test_ids)
    else:
        order = np.random.default_rng(seed).permutation(n)
        train = [ids[i] for i in order[:n_train]]
        test = [ids[i] for i in order[n_train:]]

    labels: dict[str, int] = {}
    for record in eligible:
        label = record.binary_label(label_task)
        assert label is not None
        labels[record.city_id] = label

    split = DatasetSplit(label_task=label_task, train=train, test=test, labels=labels, seed=seed)
    positives = len(split.train_positives())
    if positives == 0:
        raise DataError(f"task {label_task.value} has no positive city in the train split")

    logger.info(
        "split_built",
        task=label_task.value,
        train=len(train),
        test=len(test),
        train_positives=positives,
        seed=seed,
    )
    return split


# =============================================================================
# Density Normalization
# =============================================================================


class DensityNormalizer(BaseModel):
    """
    Min-Max-Normalisierung der Dichte, nur auf Train-Städten gefittet.

    Fehlende Werte werden mit dem Train-Median ersetzt, Werte außerhalb
    des Train-Bereichs auf [0, 1] geclippt.
    """

    minimum: float
    maximum: float
    median: float
    fitted_on: int = Field(..., ge=1)

    @classmethod
    def fit(cls, densities: Iterable[float | None]) -> DensityNormalizer:
        """
        Raises:
            ConfigurationError: keine einzige Dichte im Train-Set
        """
        present = np.array([d for d in densities if d is not None], dtype=np.float64)
        if present.size == 0:
            raise ConfigurationError("all train densities are missing; cannot normalize density")
        if present.size < 2:
            logger.warning("density_fit_single_value", value=float(present[0]))
        return cls(
            minimum=float(present.min()),
            maximum=float(present.max()),
            median=float(np.median(present)),
            fitted_on=int(present.size),
        )

    def transform(self, density: float | None) -> float:
        """Normalisierter Wert in [0, 1]."""
        value = self.median if density is None else density
        span = self.maximum - self.minimum
        if span <= 0:
            return 0.0
        return float(min(max((value - self.minimum) / span, 0.0), 1.0))

    def transform_many(self, densities: Iterable[float | None]) -> np.ndarray:
        """Vektorisierte Variante von transform."""
        return np.array([self.transform(d) for d in densities], dtype=np.float64)


def normalize_density(train_records: Iterable[CityRecord]) -> DensityNormalizer:
    """Fittet die Dichte-Normalisierung auf Train-Städten."""
    return DensityNormalizer.fit(r.density_per_sq_mi for r in train_records)
