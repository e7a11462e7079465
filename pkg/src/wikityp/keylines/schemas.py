"""
Wikityp Keyline Schemas

Anchor-Texte, Keylines, Keyline-Sets und Kandidatenlisten.
Alle Embeddings sind L2-normalisierte float64-Vektoren.
"""

from __future__ import annotations

from collections.abc import Iterable
from dataclasses import dataclass, field

import numpy as np

from wikityp.knowledge.schemas import KeylineStage, Typology


@dataclass(frozen=True)
class AnchorText:
    """Handgeschriebener Startsatz einer Typologie."""

    typology: Typology
    text: str
    embedding: np.ndarray = field(repr=False)


@dataclass(frozen=True)
class Keyline:
    """Ein Satz im Keyline-Set. Der Anchor hat keine Quellstadt."""

    text: str
    embedding: np.ndarray = field(repr=False)
    source_city_id: str | None = None
    anchor_similarity: float | None = None

    @property
    def is_anchor(self) -> bool:
        return self.source_city_id is None


@dataclass(frozen=True)
class Candidate:
    """Satz einer positiven Train-Stadt, der dem Anchor am nächsten liegt."""

    text: str
    embedding: np.ndarray = field(repr=False)
    source_city_id: str
    anchor_similarity: float
    sentence_index: int = 0

    def as_keyline(self) -> Keyline:
        return Keyline(
            text=self.text,
            embedding=self.embedding,
            source_city_id=self.source_city_id,
            anchor_similarity=self.anchor_similarity,
        )


@dataclass(frozen=True)
class CandidateList:
    """Kandidaten einer Typologie, absteigend nach Anchor-Ähnlichkeit."""

    typology: Typology
    entries: tuple[Candidate, ...]

    def __post_init__(self) -> None:
        scores = [c.anchor_similarity for c in self.entries]
        if any(a < b for a, b in zip(scores, scores[1:])):
            raise ValueError("candidates must be sorted by descending anchor similarity")

    def __len__(self) -> int:
        return len(self.entries)

    def embeddings(self) -> np.ndarray:
        """Kandidaten-Embeddings als (N, D) Matrix."""
        if not self.entries:
            return np.zeros((0, 0), dtype=np.float64)
        return np.vstack([c.embedding for c in self.entries])


@dataclass(frozen=True)
class KeylineSet:
    """
    Geordnetes Keyline-Set einer Typologie.

    keylines[0] ist immer der Anchor-Text.
    """

    typology: Typology
    stage: KeylineStage
    keylines: tuple[Keyline, ...]

    def __post_init__(self) -> None:
        if not self.keylines:
            raise ValueError("a keyline set needs at least the anchor")
        if not self.keylines[0].is_anchor:
            raise ValueError("keylines[0] must be the anchor text")

    @classmethod
    def from_anchor(
        cls, anchor: AnchorText, stage: KeylineStage = KeylineStage.INITIAL
    ) -> KeylineSet:
        """Singleton-Set nur aus dem Anchor."""
        keyline = Keyline(text=anchor.text, embedding=anchor.embedding, anchor_similarity=1.0)
        return cls(typology=anchor.typology, stage=stage, keylines=(keyline,))

    def extended(self, candidates: Iterable[Candidate], stage: KeylineStage) -> KeylineSet:
        """Neues Set mit zusätzlichen Kandidaten in gegebener Reihenfolge."""
        added = tuple(c.as_keyline() for c in candidates)
        return KeylineSet(typology=self.typology, stage=stage, keylines=self.keylines + added)

    @property
    def anchor(self) -> Keyline:
        return self.keylines[0]

    @property
    def texts(self) -> list[str]:
        return [k.text for k in self.keylines]

    def __len__(self) -> int:
        return len(self.keylines)

    def embeddings(self) -> np.ndarray:
        """Keyline-Embeddings als (K, D) Matrix."""
        return np.vstack([k.embedding for k in self.keylines])
