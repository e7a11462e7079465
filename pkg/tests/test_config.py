"""Tests für Pipeline-Config und Settings."""

from __future__ import annotations

from pathlib import Path

import pytest
import yaml

from wikityp.config import Settings, load_pipeline_config
from wikityp.errors import ConfigurationError
from wikityp.knowledge.loader import KnowledgeBase
from wikityp.knowledge.schemas import Typology
from wikityp.pipeline.commands import PipelineContext


def _write_config(path: Path, document: dict) -> Path:
    path.write_text(yaml.safe_dump(document), encoding="utf-8")
    return path


MINIMAL = {"schema_version": 1, "data": {"dataset": "dataset.csv"}}


class TestPipelineConfig:
    def test_relative_paths_resolve_against_config_dir(self, tmp_path: Path) -> None:
        config = load_pipeline_config(_write_config(tmp_path / "wikityp.yaml", MINIMAL))
        assert config.data.dataset == tmp_path / "dataset.csv"
        assert config.output_dir == tmp_path / "artifacts"
        assert config.encoder.kind == "sentence-transformers"
        assert config.cv.folds == 3
        assert config.split.seed is None

    def test_unknown_key(self, tmp_path: Path) -> None:
        path = _write_config(tmp_path / "c.yaml", {**MINIMAL, "trainer": {"learning_rate": 0.1}})
        with pytest.raises(ConfigurationError, match="learning_rate"):
            load_pipeline_config(path)

    def test_wrong_schema_version(self, tmp_path: Path) -> None:
        path = _write_config(tmp_path / "c.yaml", {**MINIMAL, "schema_version": 2})
        with pytest.raises(ConfigurationError, match="schema_version"):
            load_pipeline_config(path)

    def test_missing_file(self, tmp_path: Path) -> None:
        with pytest.raises(ConfigurationError):
            load_pipeline_config(tmp_path / "absent.yaml")

    def test_seed_is_required_for_training(self, tmp_path: Path) -> None:
        config = load_pipeline_config(_write_config(tmp_path / "c.yaml", MINIMAL))
        with pytest.raises(ConfigurationError, match="seed"):
            config.require_seed()
        assert config.with_seed(11).require_seed() == 11

    def test_unknown_feature_column(self, tmp_path: Path) -> None:
        document = {**MINIMAL, "models": {"features": {"auto": ["auto:opt", "auto:best"]}}}
        config = load_pipeline_config(_write_config(tmp_path / "c.yaml", document))
        with pytest.raises(ConfigurationError, match="auto:best"):
            PipelineContext(config).feature_mask(Typology.AUTO)

    def test_anchor_override(self, tmp_path: Path, knowledge_dir: Path) -> None:
        document = {**MINIMAL, "anchors": {"bike": "cycling is popular"}}
        config = load_pipeline_config(_write_config(tmp_path / "c.yaml", document))
        texts = KnowledgeBase(knowledge_dir).get_anchor_texts(config.anchors)
        assert texts[Typology.BIKE] == "cycling is popular"
        assert texts[Typology.AUTO] == "most people in the city use cars"


class TestSettings:
    def test_environment_prefix(self, monkeypatch: pytest.MonkeyPatch) -> None:
        monkeypatch.setenv("WIKITYP_ENV", "production")
        monkeypatch.setenv("WIKITYP_CONFIG_PATH", "/etc/wikityp.yaml")
        settings = Settings()
        assert settings.env == "production"
        assert not settings.is_development
        assert settings.config_path == Path("/etc/wikityp.yaml")

    def test_logging_settings(self, monkeypatch: pytest.MonkeyPatch) -> None:
        monkeypatch.setenv("LOG_LEVEL", "DEBUG")
        monkeypatch.setenv("LOG_FORMAT", "console")
        settings = Settings()
        assert settings.logging.level == "DEBUG"
        assert settings.logging.format == "console"

    def test_live_flag(self, monkeypatch: pytest.MonkeyPatch) -> None:
        monkeypatch.delenv("WIKITYP_LIVE", raising=False)
        assert Settings().live is False
        monkeypatch.setenv("WIKITYP_LIVE", "1")
        assert Settings().live is True
