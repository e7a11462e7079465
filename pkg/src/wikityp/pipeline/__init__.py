"""Pipeline Module - Befehle, Artefakte, Manifeste."""

from wikityp.pipeline.artifacts import ArtifactStore
from wikityp.pipeline.commands import (
    EXIT_FATAL,
    EXIT_OK,
    EXIT_PARTIAL,
    PipelineContext,
    cmd_candidates,
    cmd_embed,
    cmd_expand,
    cmd_feasibility,
    cmd_ingest,
    cmd_predict,
    cmd_run,
    cmd_sweep,
    cmd_train,
)

__all__ = [
    "EXIT_FATAL",
    "EXIT_OK",
    "EXIT_PARTIAL",
    "ArtifactStore",
    "PipelineContext",
    "cmd_candidates",
    "cmd_embed",
    "cmd_expand",
    "cmd_feasibility",
    "cmd_ingest",
    "cmd_predict",
    "cmd_run",
    "cmd_sweep",
    "cmd_train",
]
