"""
Wikityp Keyline Storage

Keyline-Sets und Kandidatenlisten als YAML (diffbar, ohne Embeddings),
Expansionsverläufe als CSV. Beim Laden werden die Texte neu eingebettet.
"""

from __future__ import annotations

from pathlib import Path
from typing import Any

import pandas as pd
import yaml

from wikityp.embeddings.encoders import SentenceEncoder
from wikityp.errors import DataError
from wikityp.keylines.expansion import TrajectoryPoint
from wikityp.keylines.features import keyline_embeddings
from wikityp.keylines.schemas import CandidateList, Keyline, KeylineSet
from wikityp.knowledge.schemas import KeylineStage, Typology

TRAJECTORY_COLUMNS = ["expansion", "mean_auc", "lift_pct"]


def _dump(path: Path, document: dict[str, Any]) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as f:
        yaml.safe_dump(document, f, sort_keys=False, allow_unicode=True, width=120)
    return path


def _load(path: Path) -> dict[str, Any]:
    if not path.exists():
        raise DataError(f"keyline file not found: {path}")
    with open(path, encoding="utf-8") as f:
        document = yaml.safe_load(f)
    if not isinstance(document, dict):
        raise DataError(f"invalid keyline file: {path}")
    return document


def save_keyline_set(path: Path | str, keyline_set: KeylineSet, encoder_id: str) -> Path:
    """Schreibt Typologie, Stufe und die geordneten Keylines."""
    document = {
        "typology": keyline_set.typology.value,
        "stage": keyline_set.stage.value,
        "encoder_id": encoder_id,
        "keylines": [
            {
                "text": k.text,
                "source_city_id": k.source_city_id,
                "anchor_similarity": k.anchor_similarity,
            }
            for k in keyline_set.keylines
        ],
    }
    return _dump(Path(path), document)


def load_keyline_set(path: Path | str, encoder: SentenceEncoder) -> KeylineSet:
    """
    Lädt ein Keyline-Set und bettet die Texte mit encoder ein.

    Raises:
        DataError: Datei fehlt, ist ungültig oder stammt von einem anderen Encoder
    """
    path = Path(path)
    document = _load(path)
    if document.get("encoder_id") not in (None, "", encoder.encoder_id):
        raise DataError(
            f"{path} was built with encoder {document['encoder_id']}, current is {encoder.encoder_id}"
        )
    try:
        entries = document["keylines"]
        typology = Typology(document["typology"])
        stage = KeylineStage(document["stage"])
    except (KeyError, ValueError) as e:
        raise DataError(f"invalid keyline file {path}: {e}") from e

    vectors = keyline_embeddings([entry["text"] for entry in entries], encoder)
    keylines = tuple(
        Keyline(
            text=entry["text"],
            embedding=vectors[i],
            source_city_id=entry.get("source_city_id"),
            anchor_similarity=entry.get("anchor_similarity"),
        )
        for i, entry in enumerate(entries)
    )
    try:
        return KeylineSet(typology=typology, stage=stage, keylines=keylines)
    except ValueError as e:
        raise DataError(f"invalid keyline file {path}: {e}") from e


def save_candidates(path: Path | str, candidates: CandidateList, encoder_id: str) -> Path:
    """Kandidatenliste mit Quellstadt, Satzindex und Score."""
    document = {
        "typology": candidates.typology.value,
        "encoder_id": encoder_id,
        "count": len(candidates),
        "candidates": [
            {
                "text": c.text,
                "source_city_id": c.source_city_id,
                "sentence_index": c.sentence_index,
                "anchor_similarity": c.anchor_similarity,
            }
            for c in candidates.entries
        ],
    }
    return _dump(Path(path), document)


def load_candidate_texts(path: Path | str) -> list[dict[str, Any]]:
    """Einträge einer Kandidatendatei (ohne Embeddings)."""
    return list(_load(Path(path)).get("candidates", []))


def save_trajectory(path: Path | str, trajectory: tuple[TrajectoryPoint, ...] | list[TrajectoryPoint]) -> Path:
    """Verlauf (e, mean_auc, lift_pct) als CSV."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    frame = pd.DataFrame(
        [(p.expansion, p.mean_auc, p.lift_pct) for p in trajectory], columns=TRAJECTORY_COLUMNS
    )
    frame.to_csv(path, index=False, lineterminator="\n")
    return path


def load_trajectory(path: Path | str) -> list[TrajectoryPoint]:
    """Liest einen gespeicherten Verlauf."""
    frame = pd.read_csv(path)
    return [
        TrajectoryPoint(expansion=int(row.expansion), mean_auc=float(row.mean_auc), lift_pct=float(row.lift_pct))
        for row in frame.itertuples(index=False)
    ]
