"""
Wikityp Configuration

Zwei Ebenen:
- Settings: Umgebung (pydantic-settings, Env Variables und .env)
- PipelineConfig: versioniertes YAML-Dokument pro Experiment
"""

from __future__ import annotations

from functools import lru_cache
from pathlib import Path
from typing import Literal

import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator
from pydantic_settings import BaseSettings, SettingsConfigDict

from wikityp.errors import ConfigurationError
from wikityp.knowledge.schemas import Typology

CONFIG_SCHEMA_VERSION = 1


class LoggingSettings(BaseSettings):
    """Logging-Konfiguration."""

    model_config = SettingsConfigDict(env_prefix="LOG_")

    level: Literal["DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"] = Field(
        default="INFO"
    )
    format: Literal["json", "console"] = Field(
        default="console",
        description="Log output format"
    )


class Settings(BaseSettings):
    """
    Umgebungs-Konfiguration für Wikityp.

    Lädt Einstellungen aus:
    1. Environment Variables (höchste Priorität)
    2. .env Datei
    3. Default Values
    """

    model_config = SettingsConfigDict(
        env_file=".env",
        env_file_encoding="utf-8",
        env_prefix="WIKITYP_",
        extra="ignore",
    )

    version: str = Field(default="0.1.0")
    env: Literal["development", "staging", "production"] = Field(
        default="development"
    )

    # Default für --config
    config_path: Path = Field(default=Path("wikityp.yaml"))

    # Live-Testsuite (Referenz-Encoder, aufgezeichnete Seiten)
    live: bool = Field(default=False)

    logging: LoggingSettings = Field(default_factory=LoggingSettings)

    @property
    def is_development(self) -> bool:
        """Prüft ob Development-Modus aktiv ist."""
        return self.env == "development"


@lru_cache
def get_settings() -> Settings:
    """Gibt die gecachte Settings-Instanz zurück."""
    return Settings()


# =============================================================================
# Pipeline Config (YAML)
# =============================================================================


class _Section(BaseModel):
    """Basis für alle Config-Abschnitte: unbekannte Keys sind Fehler."""

    model_config = ConfigDict(extra="forbid")


class DataPaths(_Section):
    """Eingabedateien und Cache-Verzeichnisse."""

    dataset: Path
    via_list: Path | None = None
    city_list: Path | None = None
    page_cache: Path = Path("cache/pages")
    embedding_cache: Path = Path("cache/embeddings")


class FetchConfig(_Section):
    """Wikipedia-Abruf."""

    offline: bool = False
    concurrency: int = Field(default=4, ge=1, le=32)
    timeout_seconds: float = Field(default=30.0, gt=0)
    user_agent: str = "wikityp/0.1 (city typology research)"


class EncoderConfig(_Section):
    """Auswahl des Satz-Encoders."""

    kind: Literal["sentence-transformers", "remote", "fixture"] = "sentence-transformers"
    model: str = "sentence-transformers/stsb-distilbert-base"
    dimension: int = Field(default=768, ge=1)
    url: str | None = None
    batch_size: int = Field(default=64, ge=1)
    vocabulary: Path | None = None
    unknown_tokens: Literal["hash", "zero"] = "hash"


class SplitConfig(_Section):
    """Train/Test-Aufteilung."""

    train_fraction: float = Field(default=0.7, gt=0, lt=1)
    seed: int | None = None
    stratify: bool = False


class CVConfig(_Section):
    """Kreuzvalidierung der Keyline-Erweiterung."""

    folds: int = Field(default=3, ge=2)
    repeats: int = Field(default=3, ge=1)
    n_jobs: int = Field(default=1, ge=1)
    include_density: bool = False
    max_reshuffles: int = Field(default=10, ge=0)


class TrainerConfig(_Section):
    """Logistische Regression."""

    l2: float | None = Field(default=None, ge=0, description="None = 1/n")
    tolerance: float = Field(default=1e-6, gt=0)
    max_iter: int = Field(default=10_000, ge=1)
    solver: Literal["newton", "gd"] = "newton"


class ModelsConfig(_Section):
    """Merkmals-Teilmengen pro Task (Liste von Spalten oder 'best')."""

    features: dict[Typology, list[str] | Literal["best"]] = Field(default_factory=dict)


class SweepConfig(_Section):
    """Teilmengen-Sweep."""

    enabled: bool = True


class PipelineConfig(_Section):
    """Versionierte Experiment-Konfiguration."""

    schema_version: int
    data: DataPaths
    output_dir: Path = Path("artifacts")
    fetch: FetchConfig = Field(default_factory=FetchConfig)
    encoder: EncoderConfig = Field(default_factory=EncoderConfig)
    anchors: dict[Typology, str] = Field(default_factory=dict)
    split: SplitConfig = Field(default_factory=SplitConfig)
    cv: CVConfig = Field(default_factory=CVConfig)
    trainer: TrainerConfig = Field(default_factory=TrainerConfig)
    models: ModelsConfig = Field(default_factory=ModelsConfig)
    sweep: SweepConfig = Field(default_factory=SweepConfig)

    @field_validator("schema_version")
    @classmethod
    def check_schema_version(cls, v: int) -> int:
        """Nur die aktuelle Schema-Version wird akzeptiert."""
        if v != CONFIG_SCHEMA_VERSION:
            raise ValueError(f"unsupported schema_version {v}, expected {CONFIG_SCHEMA_VERSION}")
        return v

    def resolve_paths(self, base_dir: Path) -> PipelineConfig:
        """Macht relative Pfade relativ zum Config-Verzeichnis absolut."""

        def _abs(path: Path | None) -> Path | None:
            if path is None or path.is_absolute():
                return path
            return base_dir / path

        data = self.data.model_copy(
            update={
                "dataset": _abs(self.data.dataset),
                "via_list": _abs(self.data.via_list),
                "city_list": _abs(self.data.city_list),
                "page_cache": _abs(self.data.page_cache),
                "embedding_cache": _abs(self.data.embedding_cache),
            }
        )
        encoder = self.encoder.model_copy(update={"vocabulary": _abs(self.encoder.vocabulary)})
        return self.model_copy(
            update={"data": data, "encoder": encoder, "output_dir": _abs(self.output_dir)}
        )

    def with_seed(self, seed: int | None) -> PipelineConfig:
        """Überschreibt den Split-Seed (CLI --seed)."""
        if seed is None:
            return self
        return self.model_copy(update={"split": self.split.model_copy(update={"seed": seed})})

    def require_seed(self) -> int:
        """Seed ist Pflicht für jeden trainierenden Befehl."""
        if self.split.seed is None:
            raise ConfigurationError("split.seed is required for training commands (or pass --seed)")
        return self.split.seed


def load_pipeline_config(path: Path | str) -> PipelineConfig:
    """
    Lädt und validiert eine Pipeline-Config.

    Raises:
        ConfigurationError: Datei fehlt, YAML-Fehler, unbekannte Keys, falsche Version
    """
    path = Path(path)
    if not path.exists():
        raise ConfigurationError(f"Config file not found: {path}")

    try:
        with open(path, encoding="utf-8") as f:
            raw = yaml.safe_load(f) or {}
    except yaml.YAMLError as e:
        raise ConfigurationError(f"YAML parse error in {path}: {e}") from e

    try:
        config = PipelineConfig.model_validate(raw)
    except ValidationError as e:
        raise ConfigurationError(f"Validation error in {path}: {e}") from e

    return config.resolve_paths(path.resolve().parent)
