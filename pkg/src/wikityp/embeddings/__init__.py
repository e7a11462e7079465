"""Embeddings Module - Satz-Encoder, Embedding-Cache, Kosinus-Ähnlichkeit."""

from wikityp.embeddings.cache import EmbeddingCache
from wikityp.embeddings.encoders import (
    FixtureEncoder,
    RemoteEncoder,
    SentenceEncoder,
    SentenceTransformerEncoder,
    build_encoder,
)
from wikityp.embeddings.similarity import (
    EmbeddingMatrix,
    cosine_similarity,
    embed_sentences,
    similarity_matrix,
)

__all__ = [
    "EmbeddingCache",
    "EmbeddingMatrix",
    "FixtureEncoder",
    "RemoteEncoder",
    "SentenceEncoder",
    "SentenceTransformerEncoder",
    "build_encoder",
    "cosine_similarity",
    "embed_sentences",
    "similarity_matrix",
]
