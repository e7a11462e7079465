"""Tests für Keyline-Features, Kandidaten, Speicherung und Erweiterung."""

from __future__ import annotations

from pathlib import Path

import numpy as np
import pytest

from wikityp.config import CVConfig, TrainerConfig
from wikityp.corpus.dataset import build_split
from wikityp.corpus.models import CityRecord
from wikityp.corpus.synthetic import PLANTED, generate_corpus
from wikityp.embeddings.encoders import FixtureEncoder
from wikityp.embeddings.similarity import EmbeddingMatrix, embed_sentences
from wikityp.errors import DataError, DomainError, FeatureMaskError, MissingEmbeddingError
from wikityp.keylines.expansion import cross_validated_auc, cv_folds, expand_keylines
from wikityp.keylines.features import (
    assemble_features,
    build_anchors,
    collect_candidates,
    extract_candidate,
    explain_feature,
    feature_vector,
    keyline_feature,
    keyline_maxima,
)
from wikityp.keylines.schemas import AnchorText, Candidate, CandidateList, KeylineSet
from wikityp.keylines.storage import load_keyline_set, save_keyline_set
from wikityp.knowledge.defaults import TYPOLOGY_ORDER
from wikityp.knowledge.loader import KnowledgeBase
from wikityp.knowledge.schemas import KeylineStage, LabelTask, Typology


@pytest.fixture
def anchors(knowledge_dir: Path, fixture_encoder: FixtureEncoder) -> dict[Typology, AnchorText]:
    return build_anchors(KnowledgeBase(knowledge_dir).get_anchor_texts(), fixture_encoder)


def _embed_all(records: list[CityRecord], encoder: FixtureEncoder) -> dict[str, EmbeddingMatrix]:
    return {r.city_id: embed_sentences(r.sentences, encoder, city_id=r.city_id) for r in records}


class TestKeylineFeature:
    def test_superset_never_decreases(self, rng: np.random.Generator) -> None:
        for _ in range(200):
            dim = int(rng.integers(2, 16))
            city = rng.standard_normal((int(rng.integers(1, 12)), dim))
            keys = rng.standard_normal((int(rng.integers(2, 10)), dim))
            subset = keys[: int(rng.integers(1, keys.shape[0]))]

            full = keyline_feature(city, keys)
            assert keyline_feature(city, subset) <= full
            assert -1.0 <= full <= 1.0

    def test_prefix_maxima_match_prefix_sets(self, rng: np.random.Generator) -> None:
        city = rng.standard_normal((6, 8))
        keys = rng.standard_normal((5, 8))
        cumulative = np.maximum.accumulate(keyline_maxima(city, keys))
        for e in range(5):
            assert cumulative[e] == keyline_feature(city, keys[: e + 1])

    def test_city_without_sentences(self) -> None:
        with pytest.raises(DomainError):
            keyline_feature(np.zeros((0, 4)), np.ones((1, 4)))

    def test_explain_feature_returns_argmax_pair(
        self,
        synthetic_records: list[CityRecord],
        synthetic_matrices: dict[str, EmbeddingMatrix],
        anchors: dict[Typology, AnchorText],
    ) -> None:
        record = next(r for r in synthetic_records if PLANTED[Typology.TRANSIT].strong in r.sentences)
        keys = KeylineSet.from_anchor(anchors[Typology.TRANSIT])
        evidence = explain_feature(synthetic_matrices[record.city_id], record.sentences, keys)

        assert evidence.sentence == PLANTED[Typology.TRANSIT].strong
        assert evidence.keyline == anchors[Typology.TRANSIT].text
        assert evidence.similarity == keyline_feature(synthetic_matrices[record.city_id], keys)
        assert evidence.similarity == pytest.approx(1 / np.sqrt(5))


class TestCandidates:
    def test_sorted_and_deduplicated(
        self,
        synthetic_records: list[CityRecord],
        synthetic_matrices: dict[str, EmbeddingMatrix],
        anchors: dict[Typology, AnchorText],
    ) -> None:
        split = build_split(synthetic_records, LabelTask.CONGESTION, 0.7, seed=3)
        sentences = {r.city_id: r.sentences for r in synthetic_records}
        candidates = collect_candidates(split, synthetic_matrices, sentences, anchors[Typology.CONGESTION])

        texts = [c.text for c in candidates.entries]
        assert texts == [PLANTED[Typology.CONGESTION].strong, PLANTED[Typology.CONGESTION].weak]
        assert candidates.entries[0].anchor_similarity == pytest.approx(1 / np.sqrt(5))
        assert candidates.entries[1].anchor_similarity == pytest.approx(1 / np.sqrt(10))

        positives = sorted(split.train_positives())
        by_id = {r.city_id: r for r in synthetic_records}
        strong_sources = [c for c in positives if PLANTED[Typology.CONGESTION].strong in by_id[c].sentences]
        assert candidates.entries[0].source_city_id == strong_sources[0]

    def test_extract_candidate_takes_first_maximum(self) -> None:
        rows = np.array([[1.0, 0.0], [0.6, 0.8], [0.6, 0.8]], dtype=np.float32)
        city = EmbeddingMatrix("c1", rows, "fixture:test", "h")
        anchor = AnchorText(Typology.BIKE, "anchor", np.array([0.6, 0.8]))

        candidate = extract_candidate(city, ["a", "b", "c"], anchor)
        assert candidate is not None
        assert (candidate.text, candidate.sentence_index, candidate.source_city_id) == ("b", 1, "c1")
        assert candidate.anchor_similarity == pytest.approx(1.0)

    def test_extract_candidate_edge_cases(self) -> None:
        anchor = AnchorText(Typology.BIKE, "anchor", np.array([1.0, 0.0]))
        empty = EmbeddingMatrix("c2", np.zeros((0, 2), dtype=np.float32), "fixture:test", "h")
        assert extract_candidate(empty, [], anchor) is None

        city = EmbeddingMatrix("c3", np.ones((2, 2), dtype=np.float32), "fixture:test", "h")
        with pytest.raises(DataError):
            extract_candidate(city, ["only one"], anchor)

    def test_missing_embeddings(
        self, synthetic_records: list[CityRecord], anchors: dict[Typology, AnchorText]
    ) -> None:
        split = build_split(synthetic_records, LabelTask.BIKE, 0.7, seed=3)
        with pytest.raises(MissingEmbeddingError):
            collect_candidates(split, {}, {}, anchors[Typology.BIKE])


class TestFeatureVectors:
    def test_columns_follow_typology_order(
        self,
        synthetic_records: list[CityRecord],
        synthetic_matrices: dict[str, EmbeddingMatrix],
        anchors: dict[Typology, AnchorText],
    ) -> None:
        sets = {t: KeylineSet.from_anchor(anchors[t]) for t in TYPOLOGY_ORDER}
        record = synthetic_records[0]
        vector = feature_vector(synthetic_matrices[record.city_id], sets)

        assert list(vector.values) == [f"{t.value}:initial" for t in TYPOLOGY_ORDER]
        with pytest.raises(FeatureMaskError):
            vector.select(["density"])

        frame = assemble_features([record.city_id], synthetic_matrices, sets.values())
        np.testing.assert_array_equal(frame.iloc[0].to_numpy(), vector.select(list(frame.columns)))

    def test_missing_set_is_rejected(
        self, synthetic_matrices: dict[str, EmbeddingMatrix], anchors: dict[Typology, AnchorText]
    ) -> None:
        sets = {Typology.AUTO: KeylineSet.from_anchor(anchors[Typology.AUTO])}
        with pytest.raises(DataError):
            feature_vector(next(iter(synthetic_matrices.values())), sets)


class TestStorage:
    def test_reloaded_set_keeps_order_and_embeddings(
        self,
        tmp_path: Path,
        fixture_encoder: FixtureEncoder,
        synthetic_records: list[CityRecord],
        synthetic_matrices: dict[str, EmbeddingMatrix],
        anchors: dict[Typology, AnchorText],
    ) -> None:
        split = build_split(synthetic_records, LabelTask.AUTO, 0.7, seed=3)
        sentences = {r.city_id: r.sentences for r in synthetic_records}
        candidates = collect_candidates(split, synthetic_matrices, sentences, anchors[Typology.AUTO])
        original = KeylineSet.from_anchor(anchors[Typology.AUTO]).extended(
            candidates.entries, KeylineStage.ALL
        )

        path = save_keyline_set(tmp_path / "auto_all.yaml", original, fixture_encoder.encoder_id)
        loaded = load_keyline_set(path, fixture_encoder)

        assert loaded.texts == original.texts
        assert loaded.stage is KeylineStage.ALL
        assert loaded.keylines[1].source_city_id == original.keylines[1].source_city_id
        np.testing.assert_array_equal(loaded.embeddings(), original.embeddings())

    def test_other_encoder_is_rejected(
        self, tmp_path: Path, fixture_encoder: FixtureEncoder, anchors: dict[Typology, AnchorText]
    ) -> None:
        path = save_keyline_set(
            tmp_path / "bike.yaml", KeylineSet.from_anchor(anchors[Typology.BIKE]), "fixture:other"
        )
        with pytest.raises(DataError, match="encoder"):
            load_keyline_set(path, fixture_encoder)


class TestExpansion:
    @pytest.fixture
    def corpus(self, fixture_encoder: FixtureEncoder) -> tuple[list[CityRecord], dict[str, EmbeddingMatrix]]:
        records = generate_corpus(n_cities=80, seed=0)
        return records, _embed_all(records, fixture_encoder)

    def test_greedy_choice_matches_prefix_oracle(
        self,
        corpus: tuple[list[CityRecord], dict[str, EmbeddingMatrix]],
        anchors: dict[Typology, AnchorText],
    ) -> None:
        records, matrices = corpus
        sentences = {r.city_id: r.sentences for r in records}
        cv = CVConfig()
        trainer = TrainerConfig()

        for seed in range(20):
            task = TYPOLOGY_ORDER[seed % 4]
            split = build_split(records, LabelTask(task.value), 0.7, seed=seed)
            candidates = collect_candidates(split, matrices, sentences, anchors[task])
            result = expand_keylines(
                task, candidates, anchors, split, matrices, cv=cv, trainer=trainer, seed=seed
            )

            y = np.asarray(split.train_labels())
            folds, fold_seed = cv_folds(y, folds=cv.folds, repeats=cv.repeats, seed=seed)
            assert fold_seed == result.fold_seed

            oracle: list[float] = []
            for e in range(len(candidates) + 1):
                sets = [
                    KeylineSet.from_anchor(anchors[t]).extended(candidates.entries[:e], KeylineStage.OPTIMAL)
                    if t is task
                    else KeylineSet.from_anchor(anchors[t])
                    for t in TYPOLOGY_ORDER
                ]
                X = assemble_features(split.train, matrices, sets).to_numpy()
                oracle.append(cross_validated_auc(X, y, folds, trainer))

            assert [p.mean_auc for p in result.trajectory] == pytest.approx(oracle, abs=1e-12)
            assert result.max_expansion == int(np.argmax(oracle))
            assert result.best_auc >= result.baseline_auc
            assert len(result.optimal) == result.max_expansion + 1
            assert result.optimal.texts == result.all_candidates.texts[: result.max_expansion + 1]

    def test_planted_lines_are_selected(
        self,
        corpus: tuple[list[CityRecord], dict[str, EmbeddingMatrix]],
        anchors: dict[Typology, AnchorText],
    ) -> None:
        records, matrices = corpus
        sentences = {r.city_id: r.sentences for r in records}
        split = build_split(records, LabelTask.TRANSIT, 0.7, seed=7)
        candidates = collect_candidates(split, matrices, sentences, anchors[Typology.TRANSIT])
        result = expand_keylines(
            Typology.TRANSIT, candidates, anchors, split, matrices,
            cv=CVConfig(), trainer=TrainerConfig(), seed=7,
        )

        assert result.max_expansion == 2
        assert result.best_auc > result.baseline_auc
        assert result.trajectory[0].lift_pct == 0.0
        assert result.optimal.stage is KeylineStage.OPTIMAL

    def test_no_improving_candidate_keeps_anchor(
        self,
        corpus: tuple[list[CityRecord], dict[str, EmbeddingMatrix]],
        anchors: dict[Typology, AnchorText],
    ) -> None:
        records, matrices = corpus
        split = build_split(records, LabelTask.AUTO, 0.7, seed=3)
        anchor = anchors[Typology.AUTO]
        # Kopien des Anchors ändern kein Präfix-Feature
        candidates = CandidateList(
            typology=Typology.AUTO,
            entries=tuple(
                Candidate(
                    text=f"copy {i}",
                    embedding=anchor.embedding.copy(),
                    source_city_id=split.train[i],
                    anchor_similarity=1.0,
                )
                for i in range(4)
            ),
        )
        result = expand_keylines(
            Typology.AUTO, candidates, anchors, split, matrices,
            cv=CVConfig(), trainer=TrainerConfig(), seed=3,
        )

        assert result.max_expansion == 0
        assert result.optimal.texts == [anchor.text]
        assert [p.mean_auc for p in result.trajectory] == [result.baseline_auc] * 5
        assert all(p.lift_pct == 0.0 for p in result.trajectory)

    def test_task_mismatch(
        self,
        corpus: tuple[list[CityRecord], dict[str, EmbeddingMatrix]],
        anchors: dict[Typology, AnchorText],
    ) -> None:
        records, matrices = corpus
        sentences = {r.city_id: r.sentences for r in records}
        split = build_split(records, LabelTask.AUTO, 0.7, seed=1)
        candidates = collect_candidates(split, matrices, sentences, anchors[Typology.AUTO])
        with pytest.raises(DataError):
            expand_keylines(
                Typology.BIKE, candidates, anchors, split, matrices,
                cv=CVConfig(), trainer=TrainerConfig(), seed=1,
            )

    def test_too_few_positives_for_folds(self) -> None:
        with pytest.raises(DataError, match="smallest class"):
            cv_folds(np.array([1, 1, 0, 0, 0, 0, 0]), folds=3, repeats=1, seed=0)
