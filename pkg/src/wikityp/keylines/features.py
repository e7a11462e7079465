"""
Wikityp Keyline Features

Keyline-Feature = maximale Kosinus-Ähnlichkeit zwischen allen Sätzen
einer Stadt und allen Keylines eines Sets. Dazu Kandidatensuche,
Feature-Vektoren, Feature-Tabellen und Evidenzzeilen.
"""

from __future__ import annotations

from collections.abc import Iterable, Mapping, Sequence
from dataclasses import dataclass

import numpy as np
import pandas as pd
import structlog

from wikityp.corpus.dataset import DensityNormalizer
from wikityp.corpus.models import DatasetSplit
from wikityp.embeddings.encoders import SentenceEncoder
from wikityp.embeddings.similarity import EmbeddingMatrix, unit_rows
from wikityp.errors import (
    DataError,
    DomainError,
    EmbeddingDimensionError,
    FeatureMaskError,
    MissingEmbeddingError,
)
from wikityp.keylines.schemas import AnchorText, Candidate, CandidateList, KeylineSet
from wikityp.knowledge.defaults import TYPOLOGY_ORDER
from wikityp.knowledge.schemas import DENSITY_COLUMN, Typology, feature_column

logger = structlog.get_logger(__name__)


# =============================================================================
# Embedding von Anchor- und Keyline-Texten
# =============================================================================


def keyline_embeddings(texts: Sequence[str], encoder: SentenceEncoder) -> np.ndarray:
    """
    Embeddings für Keyline-Texte, auf demselben Weg wie Stadtsätze
    (normalisiert, als float32 gespeichert, erneut normalisiert).
    """
    raw = np.asarray(encoder.encode(list(texts)), dtype=np.float64)
    return unit_rows(unit_rows(raw).astype(np.float32))


def build_anchors(texts: Mapping[Typology, str], encoder: SentenceEncoder) -> dict[Typology, AnchorText]:
    """AnchorText pro Typologie in kanonischer Reihenfolge."""
    order = [t for t in TYPOLOGY_ORDER if t in texts]
    vectors = keyline_embeddings([texts[t] for t in order], encoder)
    return {
        t: AnchorText(typology=t, text=texts[t], embedding=vectors[i])
        for i, t in enumerate(order)
    }


# =============================================================================
# Keyline Feature
# =============================================================================


def _city_rows(city: EmbeddingMatrix | np.ndarray) -> np.ndarray:
    rows = city.unit_rows() if isinstance(city, EmbeddingMatrix) else unit_rows(city)
    if rows.shape[0] == 0:
        raise DomainError("keyline feature of a city without sentences is undefined")
    return rows


def _key_rows(keys: KeylineSet | np.ndarray) -> np.ndarray:
    return keys.embeddings() if isinstance(keys, KeylineSet) else unit_rows(keys)


def keyline_maxima(city: EmbeddingMatrix | np.ndarray, keys: KeylineSet | np.ndarray) -> np.ndarray:
    """
    Pro Keyline die maximale Ähnlichkeit über alle Sätze, Shape (K,).

    Jede Keyline wird einzeln gegen die Satzmatrix gerechnet, der Wert
    einer Keyline hängt daher nicht von den übrigen Keylines ab.

    Raises:
        DomainError: Stadt ohne Sätze
        EmbeddingDimensionError: unterschiedliche Dimension
    """
    rows = _city_rows(city)
    key_rows = _key_rows(keys)
    if rows.shape[1] != key_rows.shape[1]:
        raise EmbeddingDimensionError(f"dimension mismatch: {rows.shape[1]} vs {key_rows.shape[1]}")
    maxima = np.array([np.max(rows @ key) for key in key_rows], dtype=np.float64)
    return np.clip(maxima, -1.0, 1.0)


def keyline_feature(city: EmbeddingMatrix | np.ndarray, keys: KeylineSet | np.ndarray) -> float:
    """Maximum der M x K Ähnlichkeitsmatrix, in [-1, 1]."""
    return float(np.max(keyline_maxima(city, keys)))


@dataclass(frozen=True)
class Evidence:
    """Satz und Keyline, die das Maximum eines Keyline-Features liefern."""

    typology: Typology
    sentence_index: int
    sentence: str
    keyline_index: int
    keyline: str
    similarity: float


def explain_feature(
    city: EmbeddingMatrix, sentences: Sequence[str], keys: KeylineSet
) -> Evidence:
    """Argmax-Paar (Satz, Keyline) des Keyline-Features."""
    rows = _city_rows(city)
    if len(sentences) != rows.shape[0]:
        raise DataError(f"{len(sentences)} sentences but {rows.shape[0]} embedding rows")

    best: tuple[float, int, int] | None = None
    for k, key in enumerate(keys.embeddings()):
        column = rows @ key
        i = int(np.argmax(column))
        value = float(column[i])
        if best is None or value > best[0]:
            best = (value, i, k)

    assert best is not None
    value, i, k = best
    return Evidence(
        typology=keys.typology,
        sentence_index=i,
        sentence=sentences[i],
        keyline_index=k,
        keyline=keys.keylines[k].text,
        similarity=min(max(value, -1.0), 1.0),
    )


# =============================================================================
# Candidates
# =============================================================================


def extract_candidate(
    city: EmbeddingMatrix, sentences: Sequence[str], anchor: AnchorText
) -> Candidate | None:
    """
    Satz mit maximaler Ähnlichkeit zum Anchor; bei Gleichstand der erste.

    Leere Seite: Warnung, kein Kandidat.
    """
    if city.size == 0 or not sentences:
        logger.warning("candidate_skipped_empty_page", city_id=city.city_id)
        return None
    if len(sentences) != city.size:
        raise DataError(f"{len(sentences)} sentences but {city.size} embedding rows for {city.city_id}")

    rows = city.unit_rows()
    similarities = rows @ anchor.embedding
    index = int(np.argmax(similarities))
    return Candidate(
        text=sentences[index],
        embedding=rows[index],
        source_city_id=city.city_id,
        anchor_similarity=float(min(max(similarities[index], -1.0), 1.0)),
        sentence_index=index,
    )


def collect_candidates(
    split: DatasetSplit,
    matrices: Mapping[str, EmbeddingMatrix],
    sentences: Mapping[str, Sequence[str]],
    anchor: AnchorText,
) -> CandidateList:
    """
    Ein Kandidat pro positiver Train-Stadt, absteigend sortiert.

    Identische Texte werden zusammengelegt (höchster Score, dann kleinste city_id).

    Raises:
        DataError: keine positive Train-Stadt
        MissingEmbeddingError: Embeddings einer positiven Stadt fehlen
    """
    positives = split.train_positives()
    if not positives:
        raise DataError(f"no positive train city for {anchor.typology.value}")

    by_text: dict[str, Candidate] = {}
    for city_id in sorted(positives):
        if city_id not in matrices:
            raise MissingEmbeddingError(f"no embeddings for city {city_id}")
        candidate = extract_candidate(matrices[city_id], sentences.get(city_id, []), anchor)
        if candidate is None:
            continue
        current = by_text.get(candidate.text)
        if current is None or candidate.anchor_similarity > current.anchor_similarity:
            by_text[candidate.text] = candidate

    entries = sorted(by_text.values(), key=lambda c: (-c.anchor_similarity, c.source_city_id))
    logger.info(
        "candidates_collected",
        typology=anchor.typology.value,
        positives=len(positives),
        candidates=len(entries),
    )
    return CandidateList(typology=anchor.typology, entries=tuple(entries))


# =============================================================================
# Feature Vectors / Tables
# =============================================================================


@dataclass(frozen=True)
class FeatureVector:
    """
    Modell-Eingaben einer Stadt, benannt nach Feature-Spalten
    ("congestion:opt", ..., "density").
    """

    city_id: str
    values: dict[str, float]

    def select(self, columns: Sequence[str]) -> np.ndarray:
        """
        Raises:
            FeatureMaskError: Spalte fehlt
        """
        missing = [c for c in columns if c not in self.values]
        if missing:
            raise FeatureMaskError(f"feature vector of {self.city_id} lacks {missing}")
        return np.array([self.values[c] for c in columns], dtype=np.float64)


def feature_vector(
    city: EmbeddingMatrix,
    keyline_sets: Mapping[Typology, KeylineSet],
    density: float | None = None,
    normalizer: DensityNormalizer | None = None,
) -> FeatureVector:
    """
    Vier Keyline-Features plus normalisierte Dichte.

    Raises:
        DataError: eines der vier Keyline-Sets fehlt
    """
    missing = [t.value for t in TYPOLOGY_ORDER if t not in keyline_sets]
    if missing:
        raise DataError(f"keyline sets missing for {missing}")

    values = {
        feature_column(t, keyline_sets[t].stage): keyline_feature(city, keyline_sets[t])
        for t in TYPOLOGY_ORDER
    }
    if normalizer is not None:
        values[DENSITY_COLUMN] = normalizer.transform(density)
    return FeatureVector(city_id=city.city_id, values=values)


def assemble_features(
    city_ids: Sequence[str],
    matrices: Mapping[str, EmbeddingMatrix],
    keyline_sets: Iterable[KeylineSet],
    *,
    densities: Mapping[str, float | None] | None = None,
    normalizer: DensityNormalizer | None = None,
) -> pd.DataFrame:
    """
    Feature-Tabelle, Index city_id, eine Spalte pro Keyline-Set
    (plus "density" wenn ein Normalizer übergeben wird).

    Raises:
        MissingEmbeddingError: Stadt ohne Embeddings
    """
    sets = list(keyline_sets)
    columns = [feature_column(s.typology, s.stage) for s in sets]

    table: dict[str, list[float]] = {c: [] for c in columns}
    for city_id in city_ids:
        matrix = matrices.get(city_id)
        if matrix is None:
            raise MissingEmbeddingError(f"no embeddings for city {city_id}")
        for column, keys in zip(columns, sets):
            table[column].append(keyline_feature(matrix, keys))

    frame = pd.DataFrame(table, index=pd.Index(list(city_ids), name="city_id"), columns=columns)
    if normalizer is not None:
        densities = densities or {}
        frame[DENSITY_COLUMN] = normalizer.transform_many(densities.get(c) for c in city_ids)
    return frame
