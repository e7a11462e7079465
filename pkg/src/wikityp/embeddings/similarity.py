"""
Wikityp Similarity

Einbettung von Satzlisten (mit Cache) und Kosinus-Ähnlichkeiten.
Alle Zeilen sind nach embed_sentences L2-normalisiert.
"""

from __future__ import annotations

from collections.abc import Sequence
from dataclasses import dataclass
from typing import TYPE_CHECKING

import numpy as np
import structlog

from wikityp.corpus.models import sentences_hash
from wikityp.errors import DomainError, EmbeddingDimensionError

if TYPE_CHECKING:
    from wikityp.embeddings.cache import EmbeddingCache
    from wikityp.embeddings.encoders import SentenceEncoder

logger = structlog.get_logger(__name__)


@dataclass(frozen=True)
class EmbeddingMatrix:
    """
    Normalisierte Satzvektoren eines Dokuments.

    Zeile i gehört zu Satz i der Stadt. Gespeichert als float32.
    """

    city_id: str
    rows: np.ndarray
    encoder_id: str
    content_hash: str

    @property
    def dimension(self) -> int:
        return int(self.rows.shape[1])

    @property
    def size(self) -> int:
        return int(self.rows.shape[0])

    def unit_rows(self) -> np.ndarray:
        """Zeilen in float64, erneut auf Länge 1 gebracht."""
        return unit_rows(self.rows)


def unit_rows(matrix: np.ndarray) -> np.ndarray:
    """
    L2-Normalisierung jeder Zeile in float64.

    Raises:
        DomainError: Nullzeile
    """
    values = np.atleast_2d(np.asarray(matrix, dtype=np.float64))
    norms = np.linalg.norm(values, axis=1, keepdims=True)
    if values.size and np.any(norms == 0):
        zero_rows = np.flatnonzero(norms[:, 0] == 0).tolist()
        raise DomainError(f"zero vector in rows {zero_rows[:5]}")
    return values / norms


def embed_sentences(
    sentences: Sequence[str],
    encoder: SentenceEncoder,
    *,
    city_id: str = "",
    cache: EmbeddingCache | None = None,
    dimension: int | None = None,
) -> EmbeddingMatrix:
    """
    Bettet Sätze ein und normalisiert jede Zeile.

    Mit Cache: Treffer auf (city_id, encoder_id, Inhalts-Hash) werden
    direkt geliefert, neue Ergebnisse geschrieben.

    Raises:
        EncoderUnavailableError: Encoder nicht erreichbar (kein Cache-Treffer)
        EmbeddingDimensionError: Encoder-Dimension != deklarierte Dimension
    """
    content_hash = sentences_hash(list(sentences))
    expected = dimension or encoder.dimension

    if cache is not None:
        cached = cache.read(city_id, encoder.encoder_id, content_hash)
        if cached is not None:
            if cached.dimension != expected:
                raise EmbeddingDimensionError(
                    f"cached embeddings of {city_id} have D={cached.dimension}, expected {expected}"
                )
            return cached

    raw = np.asarray(encoder.encode(sentences), dtype=np.float64)
    if raw.ndim != 2 or raw.shape[0] != len(sentences):
        raise EmbeddingDimensionError(
            f"encoder returned shape {raw.shape} for {len(sentences)} sentences"
        )
    if raw.shape[1] != expected:
        raise EmbeddingDimensionError(
            f"encoder {encoder.encoder_id} returned D={raw.shape[1]}, expected {expected}"
        )

    matrix = EmbeddingMatrix(
        city_id=city_id,
        rows=unit_rows(raw).astype(np.float32) if len(sentences) else raw.astype(np.float32),
        encoder_id=encoder.encoder_id,
        content_hash=content_hash,
    )
    if cache is not None:
        cache.write(matrix)
    logger.debug("sentences_embedded", city_id=city_id, sentences=len(sentences))
    return matrix


# =============================================================================
# Similarity
# =============================================================================


def cosine_similarity(u: np.ndarray, v: np.ndarray) -> float:
    """
    Kosinus-Ähnlichkeit zweier Vektoren, in [-1, 1].

    Raises:
        EmbeddingDimensionError: unterschiedliche Dimension
        DomainError: Nullvektor
    """
    a = np.asarray(u, dtype=np.float64).ravel()
    b = np.asarray(v, dtype=np.float64).ravel()
    if a.shape != b.shape:
        raise EmbeddingDimensionError(f"dimension mismatch: {a.shape[0]} vs {b.shape[0]}")
    norm_a = np.linalg.norm(a)
    norm_b = np.linalg.norm(b)
    if norm_a == 0 or norm_b == 0:
        raise DomainError("cosine similarity of a zero vector is undefined")
    value = float(np.dot(a / norm_a, b / norm_b))
    return min(max(value, -1.0), 1.0)


def similarity_matrix(
    a: EmbeddingMatrix | np.ndarray, b: EmbeddingMatrix | np.ndarray
) -> np.ndarray:
    """
    M x K Matrix der Kosinus-Ähnlichkeiten zwischen den Zeilen von a und b.

    Raises:
        EmbeddingDimensionError: unterschiedliche Dimension
    """
    left = a.unit_rows() if isinstance(a, EmbeddingMatrix) else unit_rows(a)
    right = b.unit_rows() if isinstance(b, EmbeddingMatrix) else unit_rows(b)
    if left.shape[1] != right.shape[1]:
        raise EmbeddingDimensionError(
            f"dimension mismatch: {left.shape[1]} vs {right.shape[1]}"
        )
    return np.clip(left @ right.T, -1.0, 1.0)
