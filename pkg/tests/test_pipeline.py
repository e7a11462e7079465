"""End-to-End Tests der Pipeline auf dem synthetischen Offline-Workspace."""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np
import pandas as pd
import pytest

from wikityp.config import PipelineConfig, load_pipeline_config
from wikityp.corpus.dataset import load_dataset, write_dataset
from wikityp.corpus.models import sentences_hash
from wikityp.corpus.synthetic import write_workspace
from wikityp.embeddings.cache import EmbeddingCache
from wikityp.embeddings.similarity import EmbeddingMatrix
from wikityp.errors import DataError, EmbeddingDimensionError, MissingEmbeddingError, StaleArtifactError
from wikityp.knowledge.defaults import TYPOLOGY_ORDER
from wikityp.knowledge.schemas import KeylineStage, LabelTask, Typology
from wikityp.ml.feasibility import ContingencyTable
from wikityp.ml.sweep import load_sweep
from wikityp.pipeline.commands import (
    EXIT_OK,
    EXIT_PARTIAL,
    PREDICTION_COLUMNS,
    PipelineContext,
    cmd_embed,
    cmd_expand,
    cmd_feasibility,
    cmd_ingest,
    cmd_predict,
    cmd_run,
    cmd_sweep,
    cmd_train,
)


def _artifact_bytes(root: Path) -> dict[str, bytes]:
    return {p.relative_to(root).as_posix(): p.read_bytes() for p in sorted(root.rglob("*")) if p.is_file()}


@pytest.fixture(scope="module")
def finished(tmp_path_factory: pytest.TempPathFactory) -> tuple[PipelineConfig, int]:
    """Einmal komplett durchgelaufener Workspace."""
    config_path = write_workspace(tmp_path_factory.mktemp("run") / "ws", n_cities=80, extra_cities=10)
    config = load_pipeline_config(config_path)
    return config, cmd_run(PipelineContext(config))


class TestFullRun:
    def test_run_succeeds(self, finished: tuple[PipelineConfig, int]) -> None:
        _, status = finished
        assert status == EXIT_OK

    def test_models_separate_on_test_split(self, finished: tuple[PipelineConfig, int]) -> None:
        config, _ = finished
        for typology in TYPOLOGY_ORDER:
            metrics = json.loads((config.output_dir / "models" / f"{typology.value}_metrics.json").read_text())
            assert metrics["test"]["test_auc"] >= 0.9
            assert metrics["features"][0] == f"{typology.value}:opt"

    def test_expansion_adds_planted_lines(self, finished: tuple[PipelineConfig, int]) -> None:
        config, _ = finished
        meta = json.loads(
            (config.output_dir / "keylines" / "transit_opt.yaml.meta.json").read_text(encoding="utf-8")
        )
        assert meta["params"]["max_expansion"] == 2
        assert meta["seed"] == 7
        assert "dataset.csv" in meta["inputs"]

    def test_sweep_reports(self, finished: tuple[PipelineConfig, int]) -> None:
        config, _ = finished
        for typology in TYPOLOGY_ORDER:
            rows = load_sweep(config.output_dir / "sweeps" / f"{typology.value}_sweep.csv")
            assert len(rows) == 21
            assert rows[0].lift_pct == 0.0
            assert sum(r.best for r in rows) == 1

    def test_predictions_cover_city_list(self, finished: tuple[PipelineConfig, int]) -> None:
        config, _ = finished
        predictions = pd.read_csv(config.output_dir / "predictions" / "predictions.csv")
        assert list(predictions.columns) == PREDICTION_COLUMNS
        assert len(predictions) == 90
        probabilities = predictions[[f"p_{t.value}" for t in TYPOLOGY_ORDER]].to_numpy()
        assert np.all((probabilities >= 0) & (probabilities <= 1))

        missing = pd.read_csv(config.output_dir / "predictions" / "predictions_missing.csv")
        assert missing.empty

        evidence = pd.read_csv(config.output_dir / "predictions" / "evidence.csv")
        assert set(evidence["typology"]) <= {t.value for t in Typology}
        assert np.all(evidence["similarity"] <= 1.0)

    def test_predictions_reproduce_training_probabilities(self, finished: tuple[PipelineConfig, int]) -> None:
        config, _ = finished
        predictions = pd.read_csv(config.output_dir / "predictions" / "predictions.csv", dtype={"city_id": str})
        predictions = predictions.set_index("city_id")
        for typology in TYPOLOGY_ORDER:
            train = pd.read_csv(
                config.output_dir / "models" / f"{typology.value}_train_predictions.csv", dtype={"city_id": str}
            ).set_index("city_id")
            joined = train.join(predictions[f"p_{typology.value}"])
            np.testing.assert_array_equal(joined["probability"], joined[f"p_{typology.value}"])

    def test_feasibility_outputs(self, finished: tuple[PipelineConfig, int]) -> None:
        config, _ = finished
        ratios = pd.read_csv(config.output_dir / "feasibility" / "bayes_ratios.csv")
        assert list(ratios["typology"]) == [t.value for t in TYPOLOGY_ORDER]
        metrics = json.loads((config.output_dir / "feasibility" / "metrics.json").read_text())
        assert set(metrics["coefficients"]) == {"congestion:opt", "auto:opt", "transit:opt", "bike:opt",
                                                "density", "intercept"}

    def test_second_workspace_is_byte_identical(
        self, finished: tuple[PipelineConfig, int], tmp_path: Path
    ) -> None:
        config, _ = finished
        other = load_pipeline_config(write_workspace(tmp_path / "ws", n_cities=80, extra_cities=10))
        assert cmd_run(PipelineContext(other)) == EXIT_OK
        assert _artifact_bytes(other.output_dir) == _artifact_bytes(config.output_dir)


class TestStages:
    def test_embed_rerun_hits_cache(self, pipeline_config: PipelineConfig) -> None:
        assert cmd_ingest(PipelineContext(pipeline_config)) == EXIT_OK
        first = PipelineContext(pipeline_config)
        assert cmd_embed(first) == EXIT_OK
        assert first.embedding_cache.hit_rate == 0.0

        second = PipelineContext(pipeline_config)
        cmd_embed(second)
        assert second.embedding_cache.hit_rate == 1.0

    def test_train_before_ingest(self, pipeline_config: PipelineConfig) -> None:
        with pytest.raises(DataError, match="wikityp ingest"):
            cmd_train(PipelineContext(pipeline_config), Typology.AUTO)

    def test_expand_without_embeddings(self, pipeline_config: PipelineConfig) -> None:
        cmd_ingest(PipelineContext(pipeline_config))
        with pytest.raises(MissingEmbeddingError, match="wikityp embed"):
            cmd_expand(PipelineContext(pipeline_config), Typology.AUTO)

    def test_dead_page_is_partial(self, pipeline_config: PipelineConfig, workspace: Path) -> None:
        (workspace.parent / "cache" / "pages" / "city_085.json").unlink()
        assert cmd_ingest(PipelineContext(pipeline_config)) == EXIT_PARTIAL

        summary = json.loads((pipeline_config.output_dir / "corpus" / "ingest_summary.json").read_text())
        assert list(summary["failed"]) == ["city_085"]
        assert summary["parsed"] == 89

    def test_dimension_mismatch_in_cache(self, pipeline_config: PipelineConfig) -> None:
        ctx = PipelineContext(pipeline_config)
        cmd_ingest(ctx)
        cmd_embed(ctx)

        city_id = "city_000"
        sentences = ctx.sentences[city_id]
        EmbeddingCache(pipeline_config.data.embedding_cache).write(
            EmbeddingMatrix(city_id, np.ones((len(sentences), 8), dtype=np.float32),
                            ctx.encoder.encoder_id, sentences_hash(sentences))
        )
        with pytest.raises(EmbeddingDimensionError):
            PipelineContext(pipeline_config).matrices([city_id])

    def test_modified_keylines_make_models_stale(self, pipeline_config: PipelineConfig) -> None:
        ctx = PipelineContext(pipeline_config)
        for step in (cmd_ingest, cmd_embed):
            step(ctx)
        cmd_expand(ctx)
        cmd_train(ctx)
        assert cmd_predict(PipelineContext(pipeline_config)) == EXIT_OK

        keylines = PipelineContext(pipeline_config).store.keyline_path(Typology.BIKE, KeylineStage.OPTIMAL)
        keylines.write_text(keylines.read_text(encoding="utf-8") + "# edited\n", encoding="utf-8")
        with pytest.raises(StaleArtifactError):
            cmd_predict(PipelineContext(pipeline_config))

    def test_model_for_each_task(self, pipeline_config: PipelineConfig) -> None:
        ctx = PipelineContext(pipeline_config)
        cmd_ingest(ctx)
        cmd_embed(ctx)
        cmd_expand(ctx, Typology.CONGESTION)
        cmd_train(ctx, Typology.CONGESTION)
        assert ctx.store.model_path(LabelTask.CONGESTION).exists()
        assert not ctx.store.model_path(LabelTask.BIKE).exists()

    def test_relabelled_dataset_makes_keylines_stale(
        self, pipeline_config: PipelineConfig, workspace: Path
    ) -> None:
        ctx = PipelineContext(pipeline_config)
        for step in (cmd_ingest, cmd_embed, cmd_expand):
            step(ctx)

        swap = {
            Typology.AUTO: Typology.BIKE,
            Typology.BIKE: Typology.CONGESTION,
            Typology.CONGESTION: Typology.AUTO,
        }
        dataset = workspace.parent / "dataset.csv"
        write_dataset(
            dataset,
            [
                r.model_copy(update={"typology_label": swap.get(r.typology_label, r.typology_label)})
                for r in load_dataset(dataset)
            ],
        )
        assert cmd_ingest(PipelineContext(pipeline_config)) == EXIT_OK

        with pytest.raises(StaleArtifactError, match="auto_opt"):
            cmd_train(PipelineContext(pipeline_config), Typology.AUTO)
        with pytest.raises(StaleArtifactError, match="auto_opt"):
            cmd_sweep(PipelineContext(pipeline_config), Typology.AUTO)
        with pytest.raises(StaleArtifactError, match="congestion_opt"):
            cmd_feasibility(PipelineContext(pipeline_config))
        assert not ctx.store.model_path(LabelTask.AUTO).exists()

    def test_bayes_ratios_count_typology_train_cities(self, workspace: Path) -> None:
        root = workspace.parent
        labeled = load_dataset(root / "dataset.csv")
        known = {r.city_id for r in labeled}
        via_only = [r for r in load_dataset(root / "cities.csv") if r.city_id not in known]
        write_dataset(root / "dataset.csv", [*labeled, *via_only])
        with open(root / "via_cities.txt", "a", encoding="utf-8") as f:
            f.writelines(f"{r.name} {r.url}\n" for r in via_only[:6])

        ctx = PipelineContext(load_pipeline_config(workspace))
        for step in (cmd_ingest, cmd_embed, cmd_expand):
            step(ctx)
        assert cmd_feasibility(ctx) == EXIT_OK

        train = [ctx.records[cid] for cid in ctx.split(LabelTask.CONGESTION).train]
        assert all(r.typology_label is not None for r in train)
        report = pd.read_csv(ctx.store.feasibility_dir / "bayes_ratios.csv").set_index("typology")
        for typology in TYPOLOGY_ORDER:
            table = ContingencyTable.from_records(train, typology)
            row = report.loc[typology.value]
            assert (
                row["via_typology"], row["nonvia_typology"], row["via_other"], row["nonvia_other"]
            ) == (table.via_typology, table.nonvia_typology, table.via_other, table.nonvia_other)

        metrics = json.loads((ctx.store.feasibility_dir / "metrics.json").read_text(encoding="utf-8"))
        assert metrics["n_ratio_cities"] == len(train)
        assert metrics["n_train"] + metrics["n_test"] == len(labeled) + len(via_only)
