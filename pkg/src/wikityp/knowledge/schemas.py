"""
Wikityp Knowledge Base - Schemas

Enums und Datenmodelle für Typologien, Label-Tasks und Keyline-Stufen.
"""

from __future__ import annotations

from enum import Enum

from pydantic import BaseModel, Field


# =============================================================================
# Enums
# =============================================================================


class Typology(str, Enum):
    """Verkehrstypologie einer Stadt."""

    CONGESTION = "congestion"
    AUTO = "auto"
    TRANSIT = "transit"
    BIKE = "bike"

    @property
    def short(self) -> str:
        """Kurzform für Tabellen (c, a, t, b)."""
        return self.value[0]


class LabelTask(str, Enum):
    """Binäre Klassifikationsaufgabe (One-vs-All oder Via)."""

    CONGESTION = "congestion"
    AUTO = "auto"
    TRANSIT = "transit"
    BIKE = "bike"
    VIA = "via"

    @property
    def typology(self) -> Typology | None:
        """Zugehörige Typologie, None für die Via-Aufgabe."""
        if self is LabelTask.VIA:
            return None
        return Typology(self.value)


class KeylineStage(str, Enum):
    """Ausbaustufe eines Keyline-Sets."""

    INITIAL = "initial"
    OPTIMAL = "opt"
    ALL = "all"


# =============================================================================
# Feature-Spalten
# =============================================================================

DENSITY_COLUMN = "density"


def feature_column(typology: Typology, stage: KeylineStage) -> str:
    """Spaltenname eines Keyline-Features, z.B. 'congestion:opt'."""
    return f"{typology.value}:{stage.value}"


def parse_feature_column(column: str) -> tuple[Typology, KeylineStage] | None:
    """
    Zerlegt einen Spaltennamen.

    Returns:
        (Typologie, Stufe) oder None für die Dichte-Spalte

    Raises:
        ValueError: unbekannter Spaltenname
    """
    if column == DENSITY_COLUMN:
        return None
    typology, _, stage = column.partition(":")
    return Typology(typology), KeylineStage(stage)


# =============================================================================
# Anchor-Datei
# =============================================================================


class AnchorsFile(BaseModel):
    """Inhalt von data/knowledge/anchors.yaml."""

    anchors: dict[Typology, str] = Field(..., min_length=4, max_length=4)

    model_config = {"extra": "forbid"}
