"""
Wikityp Pipeline Commands

Ein Befehl pro Stufe: ingest, embed, candidates, expand, train, sweep,
predict, feasibility. Jeder Befehl liest seine Eingaben aus output_dir,
schreibt seine Artefakte samt Manifest und liefert einen Exit-Code
(0 ok, 1 teilweise fehlgeschlagen).
"""

from __future__ import annotations

import asyncio
import functools
import hashlib
from collections.abc import Iterable, Sequence
from pathlib import Path

import httpx
import numpy as np
import pandas as pd
import structlog

from wikityp.config import PipelineConfig
from wikityp.corpus.dataset import (
    DensityNormalizer,
    apply_via_list,
    attach_corpus,
    build_split,
    load_dataset,
    load_via_list,
    normalize_density,
    read_infobox_table,
    read_sentences,
    write_infobox_table,
    write_sentences,
)
from wikityp.corpus.fetch import PageCache, PageFetcher
from wikityp.corpus.models import CityRecord, DatasetSplit, InfoboxNumerics, sentences_hash
from wikityp.corpus.parsing import extract_infobox_numerics, extract_sentences
from wikityp.embeddings.cache import EmbeddingCache
from wikityp.embeddings.encoders import SentenceEncoder, build_encoder
from wikityp.embeddings.similarity import EmbeddingMatrix, embed_sentences
from wikityp.errors import (
    ConfigurationError,
    DataError,
    DomainError,
    EmbeddingDimensionError,
    EmptyArticleError,
    MissingEmbeddingError,
    StaleArtifactError,
    UndefinedMetricError,
    WikitypError,
)
from wikityp.keylines.expansion import expand_keylines
from wikityp.keylines.features import (
    assemble_features,
    build_anchors,
    collect_candidates,
    explain_feature,
    keyline_feature,
)
from wikityp.keylines.schemas import AnchorText, KeylineSet
from wikityp.keylines.storage import (
    load_keyline_set,
    save_candidates,
    save_keyline_set,
    save_trajectory,
)
from wikityp.knowledge.defaults import TYPOLOGY_ORDER, subset_layouts
from wikityp.knowledge.loader import KnowledgeBase
from wikityp.knowledge.schemas import (
    DENSITY_COLUMN,
    KeylineStage,
    LabelTask,
    Typology,
    feature_column,
    parse_feature_column,
)
from wikityp.ml.feasibility import FEASIBILITY_FEATURES, ViaDataset, train_feasibility_model
from wikityp.ml.metrics import classification_scores, roc_auc
from wikityp.ml.sweep import best_subset, load_sweep, save_sweep, subset_sweep
from wikityp.ml.training import ModelTrainer, TrainedModel, train_model
from wikityp.pipeline.artifacts import ArtifactStore, dump_json

logger = structlog.get_logger(__name__)

EXIT_OK = 0
EXIT_PARTIAL = 1
EXIT_FATAL = 2

PREDICTION_COLUMNS = [
    "city_id",
    "name",
    "lat",
    "lon",
    *(f"p_{t.value}" for t in TYPOLOGY_ORDER),
    *(f"label_{t.value}" for t in TYPOLOGY_ORDER),
]
MISSING_COLUMNS = ["city_id", "name", "url", "reason"]
EVIDENCE_COLUMNS = ["city_id", "typology", "sentence", "keyline", "similarity"]


# =============================================================================
# Context
# =============================================================================


class PipelineContext:
    """
    Gemeinsamer Zustand eines Befehlsaufrufs.

    Encoder, Datensatz und Anchors werden erst bei Bedarf geladen,
    damit z.B. ingest ohne Encoder läuft.
    """

    def __init__(
        self,
        config: PipelineConfig,
        *,
        encoder: SentenceEncoder | None = None,
        transport: httpx.AsyncBaseTransport | None = None,
        knowledge: KnowledgeBase | None = None,
    ) -> None:
        self.config = config
        self.store = ArtifactStore(config.output_dir)
        self.transport = transport
        self.knowledge = knowledge or KnowledgeBase()
        self._encoder = encoder

    # =========================================================================
    # Inputs
    # =========================================================================

    @functools.cached_property
    def encoder(self) -> SentenceEncoder:
        return self._encoder or build_encoder(self.config.encoder)

    @property
    def dataset_inputs(self) -> list[Path | None]:
        return [self.config.data.dataset, self.config.data.via_list]

    @functools.cached_property
    def dataset(self) -> list[CityRecord]:
        """Datensatz-Tabelle, Via-Flags aus der Via-Liste falls konfiguriert."""
        records = load_dataset(self.config.data.dataset)
        if self.config.data.via_list is not None:
            records = apply_via_list(records, load_via_list(self.config.data.via_list))
        return records

    @functools.cached_property
    def city_list(self) -> list[CityRecord]:
        """Städte für die Batch-Vorhersage (ohne city_list: der Datensatz)."""
        if self.config.data.city_list is None:
            return self.dataset
        return load_dataset(self.config.data.city_list)

    def all_cities(self) -> list[CityRecord]:
        """Datensatz plus zusätzliche Städte der City-Liste, ohne Duplikate."""
        seen = {r.city_id for r in self.dataset}
        extra = [r for r in self.city_list if r.city_id not in seen]
        return [*self.dataset, *extra]

    @functools.cached_property
    def sentences(self) -> dict[str, list[str]]:
        return read_sentences(self.store.require(self.store.sentences_path, "ingest"))

    @functools.cached_property
    def infobox(self) -> dict[str, InfoboxNumerics]:
        return read_infobox_table(self.store.require(self.store.infobox_path, "ingest"))

    def attach(self, records: Sequence[CityRecord]) -> dict[str, CityRecord]:
        return {r.city_id: r for r in attach_corpus(records, self.sentences, self.infobox)}

    @functools.cached_property
    def records(self) -> dict[str, CityRecord]:
        """Datensatz mit Sätzen und Infobox-Werten."""
        return self.attach(self.dataset)

    def labeled_records(self) -> list[CityRecord]:
        """Datensatz-Städte mit mindestens einem Satz."""
        usable = [r for r in self.records.values() if r.sentences]
        dropped = len(self.records) - len(usable)
        if dropped:
            logger.warning("cities_without_sentences_dropped", count=dropped)
        return usable

    @functools.cached_property
    def anchors(self) -> dict[Typology, AnchorText]:
        texts = self.knowledge.get_anchor_texts(self.config.anchors)
        return build_anchors(texts, self.encoder)

    @functools.cached_property
    def embedding_cache(self) -> EmbeddingCache:
        return EmbeddingCache(self.config.data.embedding_cache)

    # =========================================================================
    # Derived
    # =========================================================================

    def split(self, task: LabelTask) -> DatasetSplit:
        """Train/Test-Split der Aufgabe (Seed ist Pflicht)."""
        return build_split(
            self.labeled_records(),
            task,
            self.config.split.train_fraction,
            self.config.require_seed(),
            stratify=self.config.split.stratify,
        )

    def cached_matrix(self, city_id: str) -> EmbeddingMatrix | None:
        """Embeddings einer Stadt aus dem Cache, None wenn nicht vorhanden."""
        sentences = self.sentences.get(city_id)
        if not sentences:
            return None
        matrix = self.embedding_cache.read(city_id, self.encoder.encoder_id, sentences_hash(sentences))
        if matrix is not None and matrix.dimension != self.config.encoder.dimension:
            raise EmbeddingDimensionError(
                f"cached embeddings of {city_id} have D={matrix.dimension}, "
                f"config declares {self.config.encoder.dimension}"
            )
        return matrix

    def matrices(self, city_ids: Iterable[str]) -> dict[str, EmbeddingMatrix]:
        """
        Raises:
            MissingEmbeddingError: eine Stadt hat keine gecachten Embeddings
        """
        result: dict[str, EmbeddingMatrix] = {}
        for city_id in city_ids:
            matrix = self.cached_matrix(city_id)
            if matrix is None:
                raise MissingEmbeddingError(f"no cached embeddings for {city_id}; run `wikityp embed`")
            result[city_id] = matrix
        return result

    def keyline_set(self, typology: Typology, stage: KeylineStage) -> KeylineSet:
        """
        Initial-Sets aus den Anchors, opt/all aus den Dateien von expand.

        Raises:
            StaleArtifactError: Datensatz, Via-Liste oder Sätze haben sich seit expand geändert
        """
        if stage is KeylineStage.INITIAL:
            return KeylineSet.from_anchor(self.anchors[typology], KeylineStage.INITIAL)
        path = self.store.require(self.store.keyline_path(typology, stage), f"expand --task {typology.value}")
        self.store.check_fresh(path, [*self.dataset_inputs, self.store.sentences_path, self.store.infobox_path])
        return load_keyline_set(path, self.encoder)

    def keyline_sets_for(self, columns: Iterable[str]) -> list[KeylineSet]:
        """Keyline-Sets für die Feature-Spalten, ohne Dichte, in Spaltenreihenfolge."""
        sets: list[KeylineSet] = []
        for column in dict.fromkeys(columns):
            parsed = parse_feature_column(column)
            if parsed is not None:
                sets.append(self.keyline_set(*parsed))
        return sets

    def keyline_files(self, columns: Iterable[str]) -> list[Path]:
        """Keyline-Dateien, aus denen die Spalten stammen."""
        files: list[Path] = []
        for column in dict.fromkeys(columns):
            parsed = parse_feature_column(column)
            if parsed is not None and parsed[1] is not KeylineStage.INITIAL:
                files.append(self.store.keyline_path(*parsed))
        return files

    def feature_frame(
        self,
        city_ids: Sequence[str],
        sets: Sequence[KeylineSet],
        normalizer: DensityNormalizer | None = None,
    ) -> pd.DataFrame:
        """Feature-Tabelle aus gecachten Embeddings."""
        densities = {cid: self.records[cid].density_per_sq_mi for cid in city_ids}
        return assemble_features(
            city_ids, self.matrices(city_ids), sets, densities=densities, normalizer=normalizer
        )

    def feature_mask(self, task: Typology) -> list[str]:
        """
        Merkmale des Modells einer Typologie.

        Default: eigenes optimales Set, übrige Typologien nur mit Anchor.
        "best" übernimmt die beste Zeile des Sweeps.

        Raises:
            ConfigurationError: unbekannter Spaltenname
        """
        configured = self.config.models.features.get(task)
        if configured is None:
            return list(subset_layouts(task)[1])
        if configured == "best":
            path = self.store.require(self.store.sweep_path(task), f"sweep --task {task.value}")
            return list(best_subset(load_sweep(path)))
        for column in configured:
            try:
                parse_feature_column(column)
            except ValueError as e:
                raise ConfigurationError(f"models.features.{task.value}: unknown column {column!r}") from e
        return list(configured)


def _tasks(task: Typology | None) -> list[Typology]:
    return list(TYPOLOGY_ORDER) if task is None else [task]


def _write_csv(path: Path, frame: pd.DataFrame) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    frame.to_csv(path, index=False, lineterminator="\n")
    return path


# =============================================================================
# ingest
# =============================================================================


def cmd_ingest(ctx: PipelineContext) -> int:
    """
    Holt alle Seiten (Datensatz + City-Liste), extrahiert Sätze und Infobox.

    Städte mit fehlender oder leerer Seite werden gemeldet, der Rest
    wird geschrieben; dann Exit-Code 1.
    """
    config = ctx.config
    cities = ctx.all_cities()
    fetcher = PageFetcher(
        PageCache(config.data.page_cache),
        offline=config.fetch.offline,
        concurrency=config.fetch.concurrency,
        timeout_seconds=config.fetch.timeout_seconds,
        user_agent=config.fetch.user_agent,
        transport=ctx.transport,
    )
    pages = asyncio.run(fetcher.fetch_pages([(c.city_id, c.url) for c in cities]))

    failures: dict[str, str] = {}
    parsed: list[CityRecord] = []
    numerics: dict[str, InfoboxNumerics] = {}
    page_digest = hashlib.sha256()
    for city in sorted(cities, key=lambda c: c.city_id):
        page = pages[city.city_id]
        if isinstance(page, WikitypError):
            failures[city.city_id] = str(page)
            continue
        page_digest.update(page.content_hash.encode("ascii"))
        try:
            sentences = extract_sentences(page)
        except EmptyArticleError as e:
            logger.warning("page_without_sentences", city_id=city.city_id)
            failures[city.city_id] = str(e)
            continue
        parsed.append(city.model_copy(update={"sentences": sentences}))
        numerics[city.city_id] = extract_infobox_numerics(page)

    store = ctx.store
    write_sentences(store.sentences_path, parsed)
    write_infobox_table(store.infobox_path, numerics)
    summary = {
        "cities": len(cities),
        "parsed": len(parsed),
        "sentences": sum(len(r.sentences) for r in parsed),
        "failed": dict(sorted(failures.items())),
        "missing_infobox": sorted(cid for cid, box in numerics.items() if box == InfoboxNumerics()),
        "missing_density": sorted(
            cid for cid, box in numerics.items()
            if box.density_per_sq_mi is None
        ),
    }
    dump_json(store.ingest_summary_path, summary)

    params = {"pages_sha256": page_digest.hexdigest()}
    inputs = [*ctx.dataset_inputs, config.data.city_list]
    for artifact in (store.sentences_path, store.infobox_path, store.ingest_summary_path):
        store.write_meta(artifact, inputs, params=params)

    logger.info(
        "ingest_done",
        cities=len(cities),
        parsed=len(parsed),
        failed=len(failures),
        missing_infobox=len(summary["missing_infobox"]),
    )
    return EXIT_PARTIAL if failures else EXIT_OK


# =============================================================================
# embed
# =============================================================================


def cmd_embed(ctx: PipelineContext) -> int:
    """Bettet alle Sätze ein und füllt den Embedding-Cache."""
    store = ctx.store
    sentences = ctx.sentences
    encoder = ctx.encoder
    cache = ctx.embedding_cache

    total = 0
    for city_id in sorted(sentences):
        matrix = embed_sentences(
            sentences[city_id],
            encoder,
            city_id=city_id,
            cache=cache,
            dimension=ctx.config.encoder.dimension,
        )
        total += matrix.size

    summary = {
        "encoder_id": encoder.encoder_id,
        "dimension": ctx.config.encoder.dimension,
        "cities": len(sentences),
        "sentences": total,
    }
    dump_json(store.embed_summary_path, summary)
    store.write_meta(store.embed_summary_path, [store.sentences_path], encoder_id=encoder.encoder_id)
    logger.info(
        "embed_done",
        cities=len(sentences),
        sentences=total,
        cache_hits=cache.hits,
        cache_misses=cache.misses,
        hit_rate=round(cache.hit_rate, 4),
    )
    return EXIT_OK


# =============================================================================
# candidates / expand
# =============================================================================


def cmd_candidates(ctx: PipelineContext, task: Typology | None = None) -> int:
    """Schreibt Initial-Set und Kandidatenliste pro Typologie."""
    store = ctx.store
    seed = ctx.config.require_seed()
    encoder_id = ctx.encoder.encoder_id
    for typology in _tasks(task):
        split = ctx.split(LabelTask(typology.value))
        matrices = ctx.matrices(split.train_positives())
        candidates = collect_candidates(split, matrices, ctx.sentences, ctx.anchors[typology])

        initial = ctx.keyline_set(typology, KeylineStage.INITIAL)
        inputs = [*ctx.dataset_inputs, store.sentences_path]
        for path in (
            save_keyline_set(store.keyline_path(typology, KeylineStage.INITIAL), initial, encoder_id),
            save_candidates(store.candidates_path(typology), candidates, encoder_id),
        ):
            store.write_meta(path, inputs, seed=seed, encoder_id=encoder_id)
    return EXIT_OK


def cmd_expand(ctx: PipelineContext, task: Typology | None = None) -> int:
    """
    Greedy Keyline-Erweiterung; schreibt opt/all Sets, Kandidaten und Verlauf.

    Raises:
        DataError: Aufgabe ohne Positive im Train-Set (vor jeder Berechnung)
    """
    store = ctx.store
    config = ctx.config
    seed = config.require_seed()
    encoder_id = ctx.encoder.encoder_id

    for typology in _tasks(task):
        split = ctx.split(LabelTask(typology.value))
        matrices = ctx.matrices(split.train)
        candidates = collect_candidates(split, matrices, ctx.sentences, ctx.anchors[typology])
        densities = (
            {cid: ctx.records[cid].density_per_sq_mi for cid in split.train}
            if config.cv.include_density
            else None
        )
        result = expand_keylines(
            typology,
            candidates,
            ctx.anchors,
            split,
            matrices,
            cv=config.cv,
            trainer=config.trainer,
            seed=seed,
            densities=densities,
        )

        inputs = [*ctx.dataset_inputs, store.sentences_path]
        if config.cv.include_density:
            inputs.append(store.infobox_path)
        params = {"max_expansion": result.max_expansion, "fold_seed": result.fold_seed}
        written = [
            save_keyline_set(
                store.keyline_path(typology, KeylineStage.INITIAL),
                ctx.keyline_set(typology, KeylineStage.INITIAL),
                encoder_id,
            ),
            save_keyline_set(store.keyline_path(typology, KeylineStage.OPTIMAL), result.optimal, encoder_id),
            save_keyline_set(store.keyline_path(typology, KeylineStage.ALL), result.all_candidates, encoder_id),
            save_candidates(store.candidates_path(typology), candidates, encoder_id),
            save_trajectory(store.trajectory_path(typology), result.trajectory),
        ]
        for path in written:
            store.write_meta(path, inputs, seed=seed, encoder_id=encoder_id, params=params)
    return EXIT_OK


# =============================================================================
# train / sweep
# =============================================================================


def _test_metrics(model: TrainedModel, frame: pd.DataFrame, labels: Sequence[int]) -> dict[str, object]:
    """Test-AUC und Klassifikationsmaße an der gespeicherten Schwelle."""
    y = np.asarray(labels, dtype=np.int64)
    probabilities = model.predict_proba(frame)
    metrics: dict[str, object] = {"n_test": int(y.size), "test_positives": int(y.sum())}
    try:
        metrics["test_auc"] = roc_auc(probabilities, y)
    except UndefinedMetricError as e:
        logger.warning("test_auc_undefined", task=model.task.value, error=str(e))
        metrics["test_auc"] = None
    metrics["binary"] = classification_scores(probabilities, y, model.threshold).as_dict()
    metrics["weighted"] = classification_scores(
        probabilities, y, model.threshold, average="weighted"
    ).as_dict()
    return metrics


def cmd_train(ctx: PipelineContext, task: Typology | None = None) -> int:
    """Trainiert die One-vs-All Modelle und speichert Trainingsvorhersagen."""
    store = ctx.store
    config = ctx.config
    seed = config.require_seed()
    trainer = ModelTrainer(store.models_dir)

    for typology in _tasks(task):
        label_task = LabelTask(typology.value)
        features = ctx.feature_mask(typology)
        split = ctx.split(label_task)
        sets = ctx.keyline_sets_for(features)
        normalizer = (
            normalize_density(ctx.records[cid] for cid in split.train)
            if DENSITY_COLUMN in features
            else None
        )
        train_frame = ctx.feature_frame(split.train, sets, normalizer)
        model = train_model(
            label_task,
            train_frame,
            split.train_labels(),
            features,
            trainer=config.trainer,
            seed=seed,
            encoder_id=ctx.encoder.encoder_id,
            density=normalizer,
        )
        model_path = trainer.save_model(model)

        predictions = pd.DataFrame(
            {
                "city_id": split.train,
                "probability": model.predict_proba(train_frame),
                "label": split.train_labels(),
            }
        )
        predictions_path = _write_csv(store.train_predictions_path(label_task), predictions)

        test_frame = ctx.feature_frame(split.test, sets, normalizer)
        metrics = {
            "task": label_task.value,
            "features": features,
            "threshold": model.threshold,
            "train": model.train_metrics,
            "test": _test_metrics(model, test_frame, split.test_labels()),
        }
        metrics_path = dump_json(store.model_metrics_path(label_task), metrics)

        inputs = [*ctx.dataset_inputs, store.sentences_path, *ctx.keyline_files(features)]
        if normalizer is not None:
            inputs.append(store.infobox_path)
        for path in (model_path, predictions_path, metrics_path):
            store.write_meta(path, inputs, seed=seed, encoder_id=model.encoder_id)
    return EXIT_OK


def cmd_sweep(ctx: PipelineContext, task: Typology | None = None) -> int:
    """Bewertet alle 21 Merkmals-Teilmengen pro Typologie auf dem Test-Set."""
    store = ctx.store
    config = ctx.config
    if not config.sweep.enabled:
        logger.info("sweep_disabled")
        return EXIT_OK
    seed = config.require_seed()

    for typology in _tasks(task):
        split = ctx.split(LabelTask(typology.value))
        columns = [c for layout in subset_layouts(typology) for c in layout]
        sets = ctx.keyline_sets_for(columns)
        normalizer = normalize_density(ctx.records[cid] for cid in split.train)
        train_frame = ctx.feature_frame(split.train, sets, normalizer)
        test_frame = ctx.feature_frame(split.test, sets, normalizer)
        rows = subset_sweep(
            typology,
            train_frame,
            split.train_labels(),
            test_frame,
            split.test_labels(),
            config.trainer,
        )
        path = save_sweep(store.sweep_path(typology), rows)
        inputs = [
            *ctx.dataset_inputs,
            store.sentences_path,
            store.infobox_path,
            *ctx.keyline_files(columns),
        ]
        store.write_meta(path, inputs, seed=seed, encoder_id=ctx.encoder.encoder_id)
    return EXIT_OK


# =============================================================================
# predict
# =============================================================================


def _load_models(ctx: PipelineContext) -> dict[Typology, TrainedModel]:
    """
    Raises:
        DataError: Modell fehlt
        StaleArtifactError: Keyline-Dateien geändert oder anderer Encoder
    """
    trainer = ModelTrainer(ctx.store.models_dir)
    models: dict[Typology, TrainedModel] = {}
    for typology in TYPOLOGY_ORDER:
        task = LabelTask(typology.value)
        model = trainer.load_model(task)
        if model.encoder_id and model.encoder_id != ctx.encoder.encoder_id:
            raise StaleArtifactError(
                f"model {task.value} was trained with {model.encoder_id}, "
                f"current encoder is {ctx.encoder.encoder_id}"
            )
        ctx.store.check_fresh(ctx.store.model_path(task), ctx.keyline_files(model.features))
        models[typology] = model
    return models


def _evidence_set(model: TrainedModel, typology: Typology, sets: dict[str, KeylineSet]) -> KeylineSet:
    stage = model.keyline_stages.get(typology.value, KeylineStage.OPTIMAL.value)
    column = feature_column(typology, KeylineStage(stage))
    if column in sets:
        return sets[column]
    return sets[feature_column(typology, KeylineStage.INITIAL)]


def cmd_predict(ctx: PipelineContext) -> int:
    """
    Bewertet alle Städte der City-Liste mit den vier Modellen.

    Städte ohne Seite oder ohne Embeddings landen in der Fehlliste;
    dann Exit-Code 1.
    """
    store = ctx.store
    ctx.config.require_seed()
    models = _load_models(ctx)

    columns = [c for m in models.values() for c in m.features]
    columns += [feature_column(t, KeylineStage.INITIAL) for t in TYPOLOGY_ORDER]
    sets = {feature_column(s.typology, s.stage): s for s in ctx.keyline_sets_for(columns)}
    cities = ctx.attach(ctx.city_list)

    missing: list[tuple[str, str, str, str]] = []
    feature_rows: dict[str, dict[str, float]] = {}
    matrices: dict[str, EmbeddingMatrix] = {}
    for city_id, record in cities.items():
        if not record.sentences:
            missing.append((city_id, record.name, record.url, "no sentences (page missing or empty)"))
            continue
        matrix = ctx.cached_matrix(city_id)
        if matrix is None:
            missing.append((city_id, record.name, record.url, "no cached embeddings"))
            continue
        try:
            feature_rows[city_id] = {c: keyline_feature(matrix, s) for c, s in sets.items()}
        except DomainError as e:
            logger.warning("city_skipped", city_id=city_id, error=str(e))
            missing.append((city_id, record.name, record.url, str(e)))
            continue
        matrices[city_id] = matrix

    scored = list(feature_rows)
    frame = pd.DataFrame([feature_rows[c] for c in scored], columns=list(sets), dtype=np.float64)
    output = pd.DataFrame(
        {
            "city_id": scored,
            "name": [cities[c].name for c in scored],
            "lat": [cities[c].lat for c in scored],
            "lon": [cities[c].lon for c in scored],
        }
    )
    labels: dict[Typology, np.ndarray] = {}
    for typology, model in models.items():
        model_frame = frame
        if model.density is not None:
            model_frame = frame.assign(
                **{DENSITY_COLUMN: model.density.transform_many(cities[c].density_per_sq_mi for c in scored)}
            )
        output[f"p_{typology.value}"] = model.predict_proba(model_frame)
        labels[typology] = model.predict_label(model_frame)
    for typology in TYPOLOGY_ORDER:
        output[f"label_{typology.value}"] = labels[typology]

    evidence: list[tuple[str, str, str, str, float]] = []
    for i, city_id in enumerate(scored):
        for typology in TYPOLOGY_ORDER:
            if labels[typology][i] != 1:
                continue
            keys = _evidence_set(models[typology], typology, sets)
            line = explain_feature(matrices[city_id], ctx.sentences[city_id], keys)
            evidence.append((city_id, typology.value, line.sentence, line.keyline, line.similarity))

    _write_csv(store.predictions_path, output[PREDICTION_COLUMNS])
    _write_csv(store.missing_predictions_path, pd.DataFrame(missing, columns=MISSING_COLUMNS))
    _write_csv(store.evidence_path, pd.DataFrame(evidence, columns=EVIDENCE_COLUMNS))
    inputs = [
        store.sentences_path,
        store.infobox_path,
        *(store.model_path(LabelTask(t.value)) for t in TYPOLOGY_ORDER),
        ctx.config.data.city_list,
    ]
    for path in (store.predictions_path, store.missing_predictions_path, store.evidence_path):
        store.write_meta(path, inputs, encoder_id=ctx.encoder.encoder_id)

    logger.info("predict_done", scored=len(scored), missing=len(missing))
    return EXIT_PARTIAL if missing else EXIT_OK


# =============================================================================
# feasibility
# =============================================================================


def cmd_feasibility(ctx: PipelineContext) -> int:
    """Bayes-Verhältnisse auf dem Train-Set und das Via-Modell."""
    store = ctx.store
    config = ctx.config
    seed = config.require_seed()
    if not any(r.via_city for r in ctx.dataset):
        raise DataError("no via city in the dataset; set data.via_list or the via_flag column")

    # Verhältnisse auf dem gemeinsamen Typologie-Train-Set, das Via-Modell auf dem Via-Split
    typology_train = ctx.split(LabelTask.CONGESTION).train
    via_data = ViaDataset.from_split(ctx.records, typology_train)
    report = via_data.ratio_report()
    split = ctx.split(LabelTask.VIA)
    ratios_path = _write_csv(store.feasibility_dir / "bayes_ratios.csv", report)

    sets = ctx.keyline_sets_for(FEASIBILITY_FEATURES)
    normalizer = normalize_density(ctx.records[cid] for cid in split.train)
    result = train_feasibility_model(
        ctx.feature_frame(split.train, sets, normalizer),
        split.train_labels(),
        ctx.feature_frame(split.test, sets, normalizer),
        split.test_labels(),
        trainer=config.trainer,
        seed=seed,
        encoder_id=ctx.encoder.encoder_id,
        density=normalizer,
    )
    model_path = ModelTrainer(store.feasibility_dir).save_model(result.model)
    metrics = {
        **result.as_dict(),
        "n_train": len(split.train),
        "n_test": len(split.test),
        "n_ratio_cities": len(via_data.records),
        "ratios": {
            row.typology: row.ratio for row in report.itertuples(index=False) if not pd.isna(row.ratio)
        },
    }
    metrics_path = dump_json(store.feasibility_dir / "metrics.json", metrics)

    inputs = [
        *ctx.dataset_inputs,
        store.sentences_path,
        store.infobox_path,
        *ctx.keyline_files(FEASIBILITY_FEATURES),
    ]
    for path in (ratios_path, model_path, metrics_path):
        store.write_meta(path, inputs, seed=seed, encoder_id=ctx.encoder.encoder_id)
    return EXIT_OK


# =============================================================================
# run
# =============================================================================


def cmd_run(ctx: PipelineContext) -> int:
    """Alle Stufen nacheinander; Teilfehler werden durchgereicht."""
    status = cmd_ingest(ctx)
    status = max(status, cmd_embed(ctx))
    status = max(status, cmd_expand(ctx))
    status = max(status, cmd_sweep(ctx))
    status = max(status, cmd_train(ctx))
    status = max(status, cmd_predict(ctx))
    if ctx.config.data.via_list is not None or any(r.via_city for r in ctx.dataset):
        status = max(status, cmd_feasibility(ctx))
    return status
