"""
Wikityp Sentence Encoders

Austauschbare Encoder hinter einer gemeinsamen Schnittstelle:
- SentenceTransformerEncoder: vortrainiertes STS-Modell (Extra "encoder")
- RemoteEncoder: Sidecar-Dienst über HTTP
- FixtureEncoder: deterministisches Token-Vokabular für Tests

Encoder liefern Rohvektoren; normalisiert wird in embed_sentences.
"""

from __future__ import annotations

import hashlib
import json
import re
from abc import ABC, abstractmethod
from collections.abc import Mapping, Sequence
from pathlib import Path
from typing import Any, Literal

import httpx
import numpy as np
import structlog
import yaml

from wikityp.config import EncoderConfig
from wikityp.errors import ConfigurationError, EncoderUnavailableError

logger = structlog.get_logger(__name__)

_TOKEN = re.compile(r"[a-z0-9]+")


class SentenceEncoder(ABC):
    """Schnittstelle aller Encoder."""

    dimension: int

    @property
    @abstractmethod
    def encoder_id(self) -> str:
        """Kennung aus Encoder-Art, Modell und Version."""

    @abstractmethod
    def encode(self, sentences: Sequence[str]) -> np.ndarray:
        """
        Rohvektoren, Shape (len(sentences), D).

        Raises:
            EncoderUnavailableError: Encoder nicht erreichbar
        """


# =============================================================================
# Sentence-Transformers
# =============================================================================


class SentenceTransformerEncoder(SentenceEncoder):
    """
    Lokales sentence-transformers Modell.

    Das Modell wird beim ersten encode() geladen.
    """

    def __init__(self, model_name: str, dimension: int = 768, batch_size: int = 64) -> None:
        self.model_name = model_name
        self.dimension = dimension
        self.batch_size = batch_size
        self._model: Any = None

    @property
    def encoder_id(self) -> str:
        return f"sentence-transformers:{self.model_name}"

    def _load(self) -> Any:
        if self._model is None:
            try:
                from sentence_transformers import SentenceTransformer
            except ImportError as e:
                raise EncoderUnavailableError(
                    "sentence-transformers not installed (pip install wikityp[encoder])"
                ) from e
            try:
                self._model = SentenceTransformer(self.model_name)
            except OSError as e:
                raise EncoderUnavailableError(f"cannot load model {self.model_name}: {e}") from e
            logger.info("encoder_loaded", model=self.model_name)
        return self._model

    def encode(self, sentences: Sequence[str]) -> np.ndarray:
        model = self._load()
        vectors = model.encode(
            list(sentences),
            batch_size=self.batch_size,
            convert_to_numpy=True,
            normalize_embeddings=False,
            show_progress_bar=False,
        )
        return np.asarray(vectors, dtype=np.float64)


# =============================================================================
# Remote
# =============================================================================


class RemoteEncoder(SentenceEncoder):
    """
    Encoder-Sidecar.

    Anfrage: {"sentences": [...]}, Antwort: {"vectors": [[...], ...]}.
    """

    def __init__(
        self,
        url: str,
        model_name: str,
        dimension: int,
        *,
        batch_size: int = 64,
        timeout_seconds: float = 60.0,
        transport: httpx.BaseTransport | None = None,
    ) -> None:
        self.url = url
        self.model_name = model_name
        self.dimension = dimension
        self.batch_size = batch_size
        self.timeout_seconds = timeout_seconds
        self._transport = transport

    @property
    def encoder_id(self) -> str:
        return f"remote:{self.model_name}"

    def encode(self, sentences: Sequence[str]) -> np.ndarray:
        batches: list[np.ndarray] = []
        with httpx.Client(timeout=self.timeout_seconds, transport=self._transport) as client:
            for start in range(0, len(sentences), self.batch_size):
                batch = list(sentences[start:start + self.batch_size])
                try:
                    response = client.post(self.url, json={"sentences": batch})
                    response.raise_for_status()
                    vectors = response.json()["vectors"]
                except (httpx.HTTPError, KeyError, json.JSONDecodeError) as e:
                    raise EncoderUnavailableError(f"remote encoder at {self.url} failed: {e}") from e
                if len(vectors) != len(batch):
                    raise EncoderUnavailableError(
                        f"remote encoder returned {len(vectors)} vectors for {len(batch)} sentences"
                    )
                batches.append(np.asarray(vectors, dtype=np.float64))

        if not batches:
            return np.zeros((0, self.dimension), dtype=np.float64)
        return np.vstack(batches)


# =============================================================================
# Fixture
# =============================================================================


def _hashed_vector(text: str, dimension: int) -> np.ndarray:
    seed = int.from_bytes(hashlib.sha256(text.encode("utf-8")).digest()[:8], "little")
    return np.random.default_rng(seed).standard_normal(dimension)


def tokenize(sentence: str) -> list[str]:
    """Kleinbuchstaben-Tokens [a-z0-9]+."""
    return _TOKEN.findall(sentence.lower())


class FixtureEncoder(SentenceEncoder):
    """
    Deterministischer Encoder aus einem Token-Vokabular.

    Satzvektor = Summe der Token-Vektoren. Ein Token ist entweder ein
    Achsenindex (Einheitsvektor) oder eine explizite Vektorliste.
    Unbekannte Tokens: "hash" = pseudozufälliger Vektor aus dem Token,
    "zero" = ignoriert. Ein Satz ohne bekanntes Token bekommt einen
    pseudozufälligen Vektor aus dem ganzen Satz.
    """

    def __init__(
        self,
        vocabulary: Mapping[str, int | Sequence[float]],
        dimension: int,
        unknown_tokens: Literal["hash", "zero"] = "hash",
    ) -> None:
        self.dimension = dimension
        self.unknown_tokens = unknown_tokens
        self._vectors: dict[str, np.ndarray] = {}
        for token, entry in vocabulary.items():
            if isinstance(entry, int):
                if not 0 <= entry < dimension:
                    raise ConfigurationError(f"axis {entry} of token {token!r} outside dimension {dimension}")
                vector = np.zeros(dimension, dtype=np.float64)
                vector[entry] = 1.0
            else:
                vector = np.asarray(entry, dtype=np.float64)
                if vector.shape != (dimension,):
                    raise ConfigurationError(f"vector of token {token!r} has shape {vector.shape}")
            self._vectors[token.lower()] = vector

        digest = hashlib.sha256(f"{dimension}|{unknown_tokens}".encode())
        for token in sorted(self._vectors):
            digest.update(token.encode("utf-8"))
            digest.update(self._vectors[token].tobytes())
        self._digest = digest.hexdigest()[:16]

    @classmethod
    def from_file(
        cls, path: Path | str, unknown_tokens: Literal["hash", "zero"] = "hash"
    ) -> FixtureEncoder:
        """
        Lädt ein Vokabular im Format {dimension: D, tokens: {token: achse | [..]}}.

        Raises:
            ConfigurationError: Datei fehlt oder ist ungültig
        """
        path = Path(path)
        if not path.exists():
            raise ConfigurationError(f"fixture vocabulary not found: {path}")
        with open(path, encoding="utf-8") as f:
            document = yaml.safe_load(f) or {}
        if "dimension" not in document or "tokens" not in document:
            raise ConfigurationError(f"fixture vocabulary {path} needs 'dimension' and 'tokens'")
        return cls(document["tokens"], int(document["dimension"]), unknown_tokens)

    @property
    def encoder_id(self) -> str:
        return f"fixture:{self._digest}"

    def encode_one(self, sentence: str) -> np.ndarray:
        """Rohvektor eines Satzes."""
        vector = np.zeros(self.dimension, dtype=np.float64)
        known = False
        for token in tokenize(sentence):
            if token in self._vectors:
                vector += self._vectors[token]
                known = True
            elif self.unknown_tokens == "hash":
                vector += _hashed_vector(token, self.dimension)
                known = True

        if not known or not np.any(vector):
            return _hashed_vector(sentence, self.dimension)
        return vector

    def encode(self, sentences: Sequence[str]) -> np.ndarray:
        if not sentences:
            return np.zeros((0, self.dimension), dtype=np.float64)
        return np.vstack([self.encode_one(s) for s in sentences])


# =============================================================================
# Factory
# =============================================================================


def build_encoder(
    config: EncoderConfig, transport: httpx.BaseTransport | None = None
) -> SentenceEncoder:
    """
    Erzeugt den Encoder aus der Pipeline-Config.

    Raises:
        ConfigurationError: fehlende url/vocabulary
    """
    if config.kind == "sentence-transformers":
        return SentenceTransformerEncoder(config.model, config.dimension, config.batch_size)

    if config.kind == "remote":
        if not config.url:
            raise ConfigurationError("encoder.url is required for kind=remote")
        return RemoteEncoder(
            config.url,
            config.model,
            config.dimension,
            batch_size=config.batch_size,
            transport=transport,
        )

    if config.vocabulary is None:
        raise ConfigurationError("encoder.vocabulary is required for kind=fixture")
    encoder = FixtureEncoder.from_file(config.vocabulary, config.unknown_tokens)
    if encoder.dimension != config.dimension:
        raise ConfigurationError(
            f"fixture vocabulary has dimension {encoder.dimension}, config declares {config.dimension}"
        )
    return encoder
