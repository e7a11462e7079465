"""
Pytest Configuration and Fixtures.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np
import pytest

from wikityp.config import CVConfig, PipelineConfig, TrainerConfig, get_settings, load_pipeline_config
from wikityp.corpus.models import CityRecord
from wikityp.corpus.synthetic import (
    SYNTHETIC_DIMENSION,
    generate_corpus,
    synthetic_vocabulary,
    write_workspace,
)
from wikityp.embeddings.encoders import FixtureEncoder
from wikityp.embeddings.similarity import EmbeddingMatrix, embed_sentences


def pytest_collection_modifyitems(config: pytest.Config, items: list[pytest.Item]) -> None:
    """Live-Tests nur mit WIKITYP_LIVE=1."""
    if get_settings().live:
        return
    skip_live = pytest.mark.skip(reason="live suite disabled (set WIKITYP_LIVE=1)")
    for item in items:
        if "live" in item.keywords:
            item.add_marker(skip_live)


@pytest.fixture
def knowledge_dir() -> Path:
    """Pfad zum Knowledge-Verzeichnis."""
    return Path(__file__).parent.parent / "data" / "knowledge"


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20240601)


@pytest.fixture
def fixture_encoder() -> FixtureEncoder:
    """Encoder passend zum synthetischen Korpus."""
    return FixtureEncoder(synthetic_vocabulary(), SYNTHETIC_DIMENSION, unknown_tokens="zero")


@pytest.fixture
def synthetic_records() -> list[CityRecord]:
    """40 synthetische Städte, alle vier Typologien eingepflanzt."""
    return generate_corpus(n_cities=40, seed=0)


@pytest.fixture
def synthetic_matrices(
    synthetic_records: list[CityRecord], fixture_encoder: FixtureEncoder
) -> dict[str, EmbeddingMatrix]:
    return {
        r.city_id: embed_sentences(r.sentences, fixture_encoder, city_id=r.city_id)
        for r in synthetic_records
    }


@pytest.fixture
def trainer_config() -> TrainerConfig:
    return TrainerConfig()


@pytest.fixture
def cv_config() -> CVConfig:
    return CVConfig()


@pytest.fixture
def workspace(tmp_path: Path) -> Path:
    """Offline-Workspace mit 80 gelabelten und 10 zusätzlichen Städten."""
    return write_workspace(tmp_path / "ws", n_cities=80, seed=0, split_seed=7, extra_cities=10)


@pytest.fixture
def pipeline_config(workspace: Path) -> PipelineConfig:
    return load_pipeline_config(workspace)
