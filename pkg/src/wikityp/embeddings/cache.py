"""
Wikityp Embedding Cache

Binärdatei pro (Stadt, Encoder):

    magic      5 Bytes  b"WTEMB"
    version    uint16
    id_len     uint16, danach encoder_id (UTF-8)
    D, M       uint32, uint32
    hash       32 Bytes SHA-256 der Satzliste
    rows       M x D float32, little-endian, zeilenweise

Alle Ganzzahlen little-endian. Ein Eintrag mit anderem Inhalts-Hash
gilt als Cache-Miss.
"""

from __future__ import annotations

import hashlib
import os
import re
import struct
import tempfile
import threading
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import structlog

from wikityp.embeddings.similarity import EmbeddingMatrix
from wikityp.errors import DataError

logger = structlog.get_logger(__name__)

MAGIC = b"WTEMB"
FORMAT_VERSION = 1
SUFFIX = ".wtemb"

_PREFIX = struct.Struct("<5sHH")
_SHAPE = struct.Struct("<II")
_ROW_DTYPE = np.dtype("<f4")
_KEY_UNSAFE = re.compile(r"[^A-Za-z0-9._-]+")


@dataclass(frozen=True)
class CacheHeader:
    """Kopf einer Cache-Datei."""

    version: int
    encoder_id: str
    dimension: int
    size: int
    content_hash: str


def encode_header(header: CacheHeader) -> bytes:
    encoder_bytes = header.encoder_id.encode("utf-8")
    return (
        _PREFIX.pack(MAGIC, header.version, len(encoder_bytes))
        + encoder_bytes
        + _SHAPE.pack(header.dimension, header.size)
        + bytes.fromhex(header.content_hash)
    )


def decode_header(blob: bytes) -> tuple[CacheHeader, int]:
    """
    Returns:
        (Header, Offset der ersten Zeile)

    Raises:
        DataError: falsches Magic, unbekannte Version, abgeschnittene Datei
    """
    if len(blob) < _PREFIX.size:
        raise DataError("embedding cache file truncated")
    magic, version, id_len = _PREFIX.unpack_from(blob, 0)
    if magic != MAGIC:
        raise DataError(f"not an embedding cache file (magic {magic!r})")
    if version != FORMAT_VERSION:
        raise DataError(f"unsupported embedding cache version {version}")

    offset = _PREFIX.size
    encoder_id = blob[offset:offset + id_len].decode("utf-8")
    offset += id_len
    dimension, size = _SHAPE.unpack_from(blob, offset)
    offset += _SHAPE.size
    content_hash = blob[offset:offset + 32].hex()
    offset += 32
    if len(blob) != offset + dimension * size * _ROW_DTYPE.itemsize:
        raise DataError("embedding cache file truncated")
    return CacheHeader(version, encoder_id, dimension, size, content_hash), offset


class EmbeddingCache:
    """
    Dateibasierter Embedding-Cache.

    Lesen ist parallel möglich, Schreiben exklusiv pro Schlüssel
    (threading.Lock + atomares os.replace).
    """

    def __init__(self, cache_dir: Path | str) -> None:
        self.cache_dir = Path(cache_dir)
        self.cache_dir.mkdir(parents=True, exist_ok=True)
        self._locks: dict[str, threading.Lock] = {}
        self._locks_guard = threading.Lock()
        self.hits = 0
        self.misses = 0

    def path_for(self, city_id: str, encoder_id: str) -> Path:
        encoder_tag = hashlib.sha256(encoder_id.encode("utf-8")).hexdigest()[:12]
        return self.cache_dir / f"{_KEY_UNSAFE.sub('_', city_id)}__{encoder_tag}{SUFFIX}"

    def _lock_for(self, path: Path) -> threading.Lock:
        with self._locks_guard:
            return self._locks.setdefault(str(path), threading.Lock())

    def read_header(self, path: Path) -> CacheHeader:
        """Nur den Kopf einer Cache-Datei lesen."""
        header, _ = decode_header(path.read_bytes())
        return header

    def read(self, city_id: str, encoder_id: str, content_hash: str) -> EmbeddingMatrix | None:
        """Liest einen Eintrag, None bei Miss oder veraltetem Inhalt."""
        path = self.path_for(city_id, encoder_id)
        if not path.exists():
            self.misses += 1
            return None

        blob = path.read_bytes()
        header, offset = decode_header(blob)
        if header.encoder_id != encoder_id or header.content_hash != content_hash:
            logger.info("embedding_cache_stale", city_id=city_id, encoder_id=encoder_id)
            self.misses += 1
            return None

        rows = np.frombuffer(blob, dtype=_ROW_DTYPE, offset=offset)
        rows = rows.reshape(header.size, header.dimension).astype(np.float32)
        self.hits += 1
        return EmbeddingMatrix(
            city_id=city_id,
            rows=rows,
            encoder_id=encoder_id,
            content_hash=content_hash,
        )

    def write(self, matrix: EmbeddingMatrix) -> Path:
        """Schreibt einen Eintrag atomar."""
        path = self.path_for(matrix.city_id, matrix.encoder_id)
        rows = np.ascontiguousarray(matrix.rows, dtype=_ROW_DTYPE)
        header = CacheHeader(
            version=FORMAT_VERSION,
            encoder_id=matrix.encoder_id,
            dimension=int(rows.shape[1]),
            size=int(rows.shape[0]),
            content_hash=matrix.content_hash,
        )
        with self._lock_for(path):
            fd, tmp = tempfile.mkstemp(dir=self.cache_dir, prefix=f".{path.stem}.", suffix=".tmp")
            try:
                with os.fdopen(fd, "wb") as f:
                    f.write(encode_header(header))
                    f.write(rows.tobytes(order="C"))
                os.replace(tmp, path)
            except BaseException:
                Path(tmp).unlink(missing_ok=True)
                raise
        return path

    def entries(self) -> list[Path]:
        """Alle Cache-Dateien."""
        return sorted(self.cache_dir.glob(f"*{SUFFIX}"))

    @property
    def hit_rate(self) -> float:
        total = self.hits + self.misses
        return self.hits / total if total else 0.0
