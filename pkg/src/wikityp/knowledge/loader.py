"""
Wikityp Knowledge Base - YAML Loader

Lädt die Anchor-Texte aus data/knowledge/anchors.yaml.
"""

from __future__ import annotations

import functools
from pathlib import Path

import yaml
from pydantic import ValidationError

from wikityp.errors import ConfigurationError
from wikityp.knowledge.defaults import ANCHOR_TEXTS
from wikityp.knowledge.schemas import AnchorsFile, Typology


class KnowledgeBaseError(ConfigurationError):
    """Fehler beim Laden der Knowledge Base."""


class KnowledgeBase:
    """
    Knowledge Base Manager.

    Lädt YAML-Dateien und bietet typisierte Zugriffsmethoden.
    """

    def __init__(self, data_dir: Path | str | None = None) -> None:
        if data_dir is None:
            # Default: Relativ zum Paket-Root
            self.data_dir = Path(__file__).parent.parent.parent.parent / "data" / "knowledge"
        else:
            self.data_dir = Path(data_dir)

    def _load_yaml(self, filename: str) -> dict | None:
        """Lädt eine YAML-Datei, None wenn sie fehlt."""
        filepath = self.data_dir / filename
        if not filepath.exists():
            return None

        try:
            with open(filepath, encoding="utf-8") as f:
                return yaml.safe_load(f)
        except yaml.YAMLError as e:
            raise KnowledgeBaseError(f"YAML parse error in {filename}: {e}") from e

    @functools.cached_property
    def anchors(self) -> dict[Typology, str]:
        """Anchor-Texte aus anchors.yaml, sonst die eingebauten Defaults."""
        raw = self._load_yaml("anchors.yaml")
        if raw is None:
            return dict(ANCHOR_TEXTS)
        try:
            return AnchorsFile.model_validate(raw).anchors
        except ValidationError as e:
            raise KnowledgeBaseError(f"Validation error in anchors.yaml: {e}") from e

    def get_anchor_texts(self, overrides: dict[Typology, str] | None = None) -> dict[Typology, str]:
        """Anchor-Texte mit optionalen Overrides aus der Pipeline-Config."""
        texts = dict(self.anchors)
        if overrides:
            texts.update(overrides)
        return texts
