"""
Wikityp Fehlerhierarchie

Gemeinsame Exceptions für alle Pipeline-Stufen. Die CLI bildet
FatalError und DomainError auf Exit-Code 2 ab.
"""

from __future__ import annotations


class WikitypError(Exception):
    """Basisklasse aller Wikityp-Fehler."""


class RetriableError(WikitypError):
    """Vorübergehender Fehler (Netzwerk, Encoder nicht erreichbar)."""


class FatalError(WikitypError):
    """Nicht behebbarer Fehler, der den Befehl abbricht."""


class ConfigurationError(FatalError):
    """Ungültige oder unvollständige Konfiguration."""


class DataError(FatalError):
    """Eingabedaten verletzen eine Vorbedingung."""


class StaleArtifactError(FatalError):
    """Ein Artefakt wurde aus anderen Eingaben erzeugt als den aktuellen."""


class DomainError(WikitypError):
    """Mathematisch undefinierte Operation (Nullvektor, leere Menge, ...)."""


class UndefinedMetricError(DomainError):
    """Metrik ist für die Eingabe nicht definiert (z.B. AUC mit nur einer Klasse)."""


class UndefinedRatioError(DomainError):
    """Quotient mit Nenner 0."""

    def __init__(self, message: str, cell: str) -> None:
        super().__init__(message)
        self.cell = cell


# =============================================================================
# Stufen-spezifische Fehler
# =============================================================================


class PageMissingError(FatalError):
    """Wikipedia-Seite existiert nicht (HTTP 404)."""


class PageFetchError(RetriableError):
    """Netzwerkfehler beim Abruf einer Seite."""


class EmptyArticleError(DomainError):
    """Seite ohne verwertbare Absätze."""


class EncoderUnavailableError(RetriableError):
    """Encoder nicht erreichbar und kein Cache-Eintrag."""


class EmbeddingDimensionError(FatalError):
    """Embedding-Dimension passt nicht zur deklarierten Dimension."""


class FeatureMaskError(FatalError):
    """Eingabevektor passt nicht zur Merkmalsmaske des Modells."""


class TrainingError(FatalError):
    """Training nicht möglich (eine Klasse, nicht-endlicher Loss)."""


class MissingEmbeddingError(RetriableError):
    """Für eine Stadt liegen keine Embeddings vor."""
