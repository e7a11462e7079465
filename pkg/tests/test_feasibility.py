"""Tests für Via-Verhältnisse und das Via-Modell."""

from __future__ import annotations

import numpy as np
import pandas as pd
import pytest

from wikityp.config import TrainerConfig
from wikityp.corpus.dataset import DensityNormalizer
from wikityp.corpus.models import CityRecord
from wikityp.errors import DataError, UndefinedRatioError
from wikityp.knowledge.schemas import Typology
from wikityp.ml.feasibility import (
    FEASIBILITY_FEATURES,
    ContingencyTable,
    ViaDataset,
    bayes_ratio,
    train_feasibility_model,
)

OTHER = Typology.TRANSIT


def _records(table: ContingencyTable) -> list[CityRecord]:
    cells = [
        (table.typology, True, table.via_typology),
        (table.typology, False, table.nonvia_typology),
        (OTHER, True, table.via_other),
        (OTHER, False, table.nonvia_other),
    ]
    records: list[CityRecord] = []
    for label, via, count in cells:
        for _ in range(count):
            i = len(records)
            records.append(
                CityRecord(
                    city_id=f"c{i:04d}",
                    name=f"City {i}",
                    url=f"https://en.wikipedia.org/wiki/City_{i}",
                    typology_label=label,
                    via_city=via,
                )
            )
    return records


def _counting_ratio(records: list[CityRecord], typology: Typology) -> float:
    in_t = [r for r in records if r.typology_label is typology]
    out_t = [r for r in records if r.typology_label is not typology]
    p_t = sum(r.via_city for r in in_t) / len(in_t)  # type: ignore[misc]
    p_not_t = sum(r.via_city for r in out_t) / len(out_t)  # type: ignore[misc]
    return p_t / p_not_t


class TestBayesRatio:
    def test_matches_counting_oracle(self, rng: np.random.Generator) -> None:
        for _ in range(500):
            table = ContingencyTable(
                typology=Typology.AUTO,
                via_typology=int(rng.integers(0, 15)),
                nonvia_typology=int(rng.integers(1, 15)),
                via_other=int(rng.integers(1, 15)),
                nonvia_other=int(rng.integers(0, 15)),
            )
            records = _records(table)
            assert ContingencyTable.from_records(records, Typology.AUTO) == table
            assert bayes_ratio(table) == pytest.approx(_counting_ratio(records, Typology.AUTO), rel=1e-12)

    def test_independent_table_is_one(self) -> None:
        table = ContingencyTable(Typology.AUTO, via_typology=2, nonvia_typology=8, via_other=5, nonvia_other=20)
        assert bayes_ratio(table) == 1.0

    def test_known_ratio(self) -> None:
        # 6 von 20 Auto-Städten und 9 von 90 übrigen sind Via
        table = ContingencyTable(Typology.AUTO, via_typology=6, nonvia_typology=14, via_other=9, nonvia_other=81)
        assert bayes_ratio(table) == pytest.approx(3.0, rel=1e-12)

    def test_scaling_is_exact(self, rng: np.random.Generator) -> None:
        for _ in range(100):
            table = ContingencyTable(
                Typology.BIKE,
                via_typology=int(rng.integers(0, 20)),
                nonvia_typology=int(rng.integers(1, 20)),
                via_other=int(rng.integers(1, 20)),
                nonvia_other=int(rng.integers(0, 20)),
            )
            assert bayes_ratio(table.scaled(int(rng.integers(2, 50)))) == bayes_ratio(table)

    def test_swap_gives_reciprocal(self) -> None:
        table = ContingencyTable(Typology.AUTO, via_typology=7, nonvia_typology=3, via_other=4, nonvia_other=16)
        assert bayes_ratio(table.swapped()) == pytest.approx(1.0 / bayes_ratio(table), rel=1e-12)

    @pytest.mark.parametrize(
        ("cells", "cell"),
        [
            ((0, 0, 3, 5), "n(T)"),
            ((3, 5, 0, 0), "n(not T)"),
            ((3, 5, 0, 7), "n(V and not T)"),
        ],
    )
    def test_zero_denominator_names_cell(self, cells: tuple[int, int, int, int], cell: str) -> None:
        table = ContingencyTable(Typology.CONGESTION, *cells)
        with pytest.raises(UndefinedRatioError) as info:
            bayes_ratio(table)
        assert info.value.cell == cell

    def test_negative_counts_rejected(self) -> None:
        with pytest.raises(ValueError):
            ContingencyTable(Typology.AUTO, -1, 0, 0, 0)

    def test_unlabeled_record_rejected(self) -> None:
        record = CityRecord(city_id="c1", name="A", url="https://x/wiki/A", via_city=True)
        with pytest.raises(DataError):
            ContingencyTable.from_records([record], Typology.AUTO)


class TestViaDataset:
    def test_ratio_report_marks_undefined_ratios(self) -> None:
        table = ContingencyTable(Typology.AUTO, via_typology=4, nonvia_typology=1, via_other=0, nonvia_other=5)
        report = ViaDataset(_records(table)).ratio_report()

        assert list(report["typology"]) == ["congestion", "auto", "transit", "bike"]
        auto = report.set_index("typology").loc["auto"]
        assert pd.isna(auto["ratio"])
        assert auto["undefined_cell"] == "n(V and not T)"
        transit = report.set_index("typology").loc["transit"]
        # Transit-Städte sind nie Via, Rest 4 von 5
        assert transit["ratio"] == 0.0

    def test_from_split_keeps_labeled_cities(self, synthetic_records: list[CityRecord]) -> None:
        by_id = {r.city_id: r for r in synthetic_records}
        unlabeled = synthetic_records[0].model_copy(update={"city_id": "extra", "typology_label": None})
        by_id["extra"] = unlabeled
        dataset = ViaDataset.from_split(by_id, ["extra", *list(by_id)[:10]])
        assert len(dataset.records) == 10
        assert sum(t.total for t in dataset.tables.values()) == 40


class TestFeasibilityModel:
    @staticmethod
    def _frame(rng: np.random.Generator, n: int) -> pd.DataFrame:
        return pd.DataFrame(rng.random((n, len(FEASIBILITY_FEATURES))), columns=FEASIBILITY_FEATURES)

    def test_recovers_threshold_rule(self, rng: np.random.Generator, trainer_config: TrainerConfig) -> None:
        train = self._frame(rng, 140)
        test = self._frame(rng, 60)
        median = float(np.median(np.concatenate([train["auto:opt"], test["auto:opt"]])))
        y_train = (train["auto:opt"] > median).astype(int).to_numpy()
        y_test = (test["auto:opt"] > median).astype(int).to_numpy()

        result = train_feasibility_model(
            train, y_train, test, y_test,
            trainer=trainer_config, seed=0, density=DensityNormalizer.fit([1.0, 2.0]),
        )

        assert result.test_auc >= 0.9
        assert result.coefficients["auto:opt"] > 0
        assert set(result.as_dict()) == {"train_auc", "test_auc", "coefficients", "threshold"}
        assert "intercept" in result.coefficients

    def test_shuffled_labels_score_near_chance(
        self, rng: np.random.Generator, trainer_config: TrainerConfig
    ) -> None:
        aucs = []
        for seed in range(30):
            train = self._frame(rng, 140)
            test = self._frame(rng, 60)
            y_train = rng.permutation(np.tile([0, 1], 70))
            y_test = rng.permutation(np.tile([0, 1], 30))
            result = train_feasibility_model(
                train, y_train, test, y_test,
                trainer=trainer_config, seed=seed, density=DensityNormalizer.fit([1.0, 2.0]),
            )
            aucs.append(result.test_auc)
        assert 0.4 <= float(np.mean(aucs)) <= 0.6
