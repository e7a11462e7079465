"""
Wikityp Artifact Store

Dateilayout unter output_dir und Manifest-Dateien (<name>.meta.json)
mit SHA-256 der Eingaben. Verbraucher vergleichen die Hashes mit den
aktuellen Dateien und erkennen so veraltete Artefakte.
"""

from __future__ import annotations

import hashlib
import json
from collections.abc import Iterable, Mapping
from pathlib import Path
from typing import Any

import structlog

from wikityp.errors import DataError, StaleArtifactError
from wikityp.knowledge.schemas import KeylineStage, LabelTask, Typology

logger = structlog.get_logger(__name__)

META_SUFFIX = ".meta.json"


def file_sha256(path: Path) -> str:
    """SHA-256 über den Dateiinhalt."""
    digest = hashlib.sha256()
    with open(path, "rb") as f:
        for block in iter(lambda: f.read(1 << 16), b""):
            digest.update(block)
    return digest.hexdigest()


def dump_json(path: Path, document: Any) -> Path:
    """JSON mit sortierten Keys und festem Zeilenende."""
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        json.dump(document, f, indent=2, sort_keys=True, ensure_ascii=False)
        f.write("\n")
    return path


class ArtifactStore:
    """
    Zugriff auf alle Artefakte eines Experiments.

    Jede Methode liefert nur Pfade; Lesen und Schreiben der Inhalte
    übernehmen die Fachmodule.
    """

    def __init__(self, root: Path | str) -> None:
        self.root = Path(root)

    # =========================================================================
    # Layout
    # =========================================================================

    @property
    def sentences_path(self) -> Path:
        return self.root / "corpus" / "sentences.jsonl"

    @property
    def infobox_path(self) -> Path:
        return self.root / "corpus" / "infobox.csv"

    @property
    def ingest_summary_path(self) -> Path:
        return self.root / "corpus" / "ingest_summary.json"

    @property
    def embed_summary_path(self) -> Path:
        return self.root / "embeddings" / "embed_summary.json"

    def keyline_path(self, typology: Typology, stage: KeylineStage) -> Path:
        return self.root / "keylines" / f"{typology.value}_{stage.value}.yaml"

    def candidates_path(self, typology: Typology) -> Path:
        return self.root / "keylines" / f"{typology.value}_candidates.yaml"

    def trajectory_path(self, typology: Typology) -> Path:
        return self.root / "keylines" / f"{typology.value}_trajectory.csv"

    @property
    def models_dir(self) -> Path:
        return self.root / "models"

    def model_path(self, task: LabelTask) -> Path:
        return self.models_dir / f"{task.value}.yaml"

    def train_predictions_path(self, task: LabelTask) -> Path:
        return self.models_dir / f"{task.value}_train_predictions.csv"

    def model_metrics_path(self, task: LabelTask) -> Path:
        return self.models_dir / f"{task.value}_metrics.json"

    def sweep_path(self, typology: Typology) -> Path:
        return self.root / "sweeps" / f"{typology.value}_sweep.csv"

    @property
    def predictions_path(self) -> Path:
        return self.root / "predictions" / "predictions.csv"

    @property
    def missing_predictions_path(self) -> Path:
        return self.root / "predictions" / "predictions_missing.csv"

    @property
    def evidence_path(self) -> Path:
        return self.root / "predictions" / "evidence.csv"

    @property
    def feasibility_dir(self) -> Path:
        return self.root / "feasibility"

    # =========================================================================
    # Manifests
    # =========================================================================

    def meta_path(self, artifact: Path) -> Path:
        return artifact.with_name(artifact.name + META_SUFFIX)

    def _input_key(self, path: Path) -> str:
        """Pfade unter root relativ, externe Eingaben nur mit Dateinamen."""
        try:
            return path.resolve().relative_to(self.root.resolve()).as_posix()
        except ValueError:
            return path.name

    def input_hashes(self, inputs: Iterable[Path | None]) -> dict[str, str]:
        """
        Raises:
            DataError: Eingabedatei fehlt
        """
        hashes: dict[str, str] = {}
        for path in inputs:
            if path is None:
                continue
            if not path.exists():
                raise DataError(f"input artifact missing: {path}")
            hashes[self._input_key(path)] = file_sha256(path)
        return hashes

    def write_meta(
        self,
        artifact: Path,
        inputs: Iterable[Path | None],
        *,
        seed: int | None = None,
        encoder_id: str | None = None,
        params: Mapping[str, Any] | None = None,
    ) -> Path:
        """Manifest neben ein geschriebenes Artefakt legen."""
        document: dict[str, Any] = {
            "artifact": artifact.name,
            "sha256": file_sha256(artifact),
            "inputs": self.input_hashes(inputs),
        }
        if seed is not None:
            document["seed"] = seed
        if encoder_id is not None:
            document["encoder_id"] = encoder_id
        if params:
            document["params"] = dict(params)
        return dump_json(self.meta_path(artifact), document)

    def read_meta(self, artifact: Path) -> dict[str, Any] | None:
        path = self.meta_path(artifact)
        if not path.exists():
            return None
        with open(path, encoding="utf-8") as f:
            return json.load(f)

    def require(self, artifact: Path, producer: str) -> Path:
        """
        Raises:
            DataError: Artefakt fehlt (mit Hinweis auf den erzeugenden Befehl)
        """
        if not artifact.exists():
            raise DataError(f"{artifact} not found; run `wikityp {producer}` first")
        return artifact

    def check_fresh(self, artifact: Path, inputs: Iterable[Path | None]) -> None:
        """
        Vergleicht die im Manifest notierten Eingaben mit den aktuellen Dateien.

        Artefakte ohne Manifest gelten als frisch (z.B. von Hand erstellt).

        Raises:
            StaleArtifactError: Artefakt selbst oder eine Eingabe hat sich geändert
        """
        meta = self.read_meta(artifact)
        if meta is None:
            logger.debug("artifact_without_meta", artifact=str(artifact))
            return

        if meta.get("sha256") != file_sha256(artifact):
            raise StaleArtifactError(f"{artifact} was modified after it was written")

        recorded: dict[str, str] = meta.get("inputs", {})
        current = self.input_hashes(p for p in inputs if p is not None and p.exists())
        changed = sorted(k for k, v in current.items() if k in recorded and recorded[k] != v)
        if changed:
            raise StaleArtifactError(
                f"{artifact.name} is stale: inputs changed since it was built: {changed}"
            )
