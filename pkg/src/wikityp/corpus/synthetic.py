"""
Wikityp Synthetic Corpus

Künstliche Städte mit eingepflanzten Signalzeilen und passendem
Fixture-Encoder-Vokabular. Jede Typologie bekommt einen eigenen
Block orthogonaler Achsen:

    anchor  - Achse der Anchor-Wörter
    strong  - erste Signalzeile (1 Anchor-Token + 2 eigene Tokens)
    weak    - zweite Signalzeile (1 Anchor-Token + 3 eigene Tokens)
    decoy_a - Ablenkung mit gleicher Anchor-Ähnlichkeit wie strong
    decoy_b - Ablenkung mit gleicher Anchor-Ähnlichkeit wie weak

Positive Städte tragen strong oder weak, negative decoy_a, decoy_b
oder nichts. Nur das Anchor-Set trennt daher unvollständig, erst
Anchor + strong + weak trennt perfekt.
"""

from __future__ import annotations

from collections.abc import Iterable
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path

import numpy as np
import yaml

from wikityp.corpus.dataset import write_dataset
from wikityp.corpus.fetch import PageCache, cache_key
from wikityp.corpus.models import CityRecord, RawPage
from wikityp.knowledge.defaults import SQ_MI_PER_SQ_KM, TYPOLOGY_ORDER
from wikityp.knowledge.schemas import Typology

SYNTHETIC_DIMENSION = 24
FILLER_AXES = (20, 21)


@dataclass(frozen=True)
class PlantedLines:
    """Eingepflanzte Sätze einer Typologie und ihr Achsenblock."""

    base_axis: int
    anchor_words: tuple[str, ...]
    strong: str
    weak: str
    decoy_a: str
    decoy_b: str


PLANTED: dict[Typology, PlantedLines] = {
    Typology.CONGESTION: PlantedLines(
        base_axis=0,
        anchor_words=("heavy", "traffic", "congestion"),
        strong="Gridlock snarls arterials.",
        weak="Jammed ringroads frustrate commuters.",
        decoy_a="Heavy industry dominates.",
        decoy_b="Heavy rains flood harbor.",
    ),
    Typology.AUTO: PlantedLines(
        base_axis=5,
        anchor_words=("cars",),
        strong="Sedans clog driveways.",
        weak="Pickups fill suburban garages.",
        decoy_a="Vintage cars exhibition.",
        decoy_b="Toy cars collectors gather.",
    ),
    Typology.TRANSIT: PlantedLines(
        base_axis=10,
        anchor_words=("transit", "bus", "metro"),
        strong="Trams crisscross downtown.",
        weak="Subways carry millions daily.",
        decoy_a="Metro magazine publishes.",
        decoy_b="Bus drivers struck yesterday.",
    ),
    Typology.BIKE: PlantedLines(
        base_axis=15,
        anchor_words=("bike", "cycle"),
        strong="Cyclists throng boulevards.",
        weak="Riders pedal along greenways.",
        decoy_a="Bike thieves operate.",
        decoy_b="Cycle races attract spectators.",
    ),
}

FILLER_SENTENCE = "Local markets sell produce."


def _words(sentence: str) -> list[str]:
    return [w.strip(".,").lower() for w in sentence.split()]


def synthetic_vocabulary() -> dict[str, int]:
    """
    Token -> Achse für den Fixture-Encoder.

    Pro Signal- und Ablenkungszeile liegt ein Token auf der Anchor-Achse
    (ein Anchor-Wort, sonst das erste Wort), die übrigen auf der Achse der Zeile.
    """
    vocabulary: dict[str, int] = {}
    for lines in PLANTED.values():
        base = lines.base_axis
        for word in lines.anchor_words:
            vocabulary[word] = base
        for offset, sentence in enumerate(
            (lines.strong, lines.weak, lines.decoy_a, lines.decoy_b), start=1
        ):
            words = _words(sentence)
            # genau ein Token auf der Anchor-Achse
            anchor_token = next((w for w in words if w in lines.anchor_words), words[0])
            vocabulary[anchor_token] = base
            for word in words:
                if word != anchor_token:
                    vocabulary.setdefault(word, base + offset)

    first, second = FILLER_AXES
    vocabulary.update({"local": first, "markets": first, "sell": second, "produce": second})
    vocabulary.update({"residents": first, "enjoy": first, "mild": second, "summers": second})
    return vocabulary


def write_vocabulary(path: Path | str) -> Path:
    """Schreibt das Vokabular als YAML für encoder.vocabulary."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    document = {"dimension": SYNTHETIC_DIMENSION, "tokens": synthetic_vocabulary()}
    with open(path, "w", encoding="utf-8") as f:
        yaml.safe_dump(document, f, sort_keys=True)
    return path


# =============================================================================
# Cities
# =============================================================================


def generate_corpus(
    n_cities: int = 40,
    seed: int = 0,
    planted: Iterable[Typology] = TYPOLOGY_ORDER,
    via_rate: tuple[float, float] = (0.6, 0.15),
) -> list[CityRecord]:
    """
    Erzeugt n_cities Städte mit reihum vergebenen Typologie-Labels.

    Für jede Typologie in planted bekommen Positive abwechselnd die
    starke oder schwache Signalzeile, Negative reihum decoy_a, decoy_b
    oder nichts. via_rate = (Via-Anteil auto-lastiger Städte, Anteil sonst).
    """
    rng = np.random.default_rng(seed)
    planted_set = set(planted)
    labels = [TYPOLOGY_ORDER[i % len(TYPOLOGY_ORDER)] for i in range(n_cities)]

    transport: list[list[str]] = [[] for _ in range(n_cities)]
    for typology in TYPOLOGY_ORDER:
        if typology not in planted_set:
            continue
        lines = PLANTED[typology]
        positives = [i for i, label in enumerate(labels) if label is typology]
        negatives = [i for i, label in enumerate(labels) if label is not typology]
        for rank, i in enumerate(rng.permutation(positives)):
            transport[i].append(lines.strong if rank % 2 == 0 else lines.weak)
        for rank, i in enumerate(rng.permutation(negatives)):
            choice = (lines.decoy_a, lines.decoy_b, None)[rank % 3]
            if choice is not None:
                transport[i].append(choice)

    records: list[CityRecord] = []
    for i, label in enumerate(labels):
        name = f"Synthtown {i:03d}"
        population = float(rng.integers(100_000, 5_000_000))
        area = float(rng.integers(20, 900))
        via_p = via_rate[0] if label is Typology.AUTO else via_rate[1]
        records.append(
            CityRecord(
                city_id=f"city_{i:03d}",
                name=name,
                url=f"https://en.wikipedia.org/wiki/Synthtown_{i:03d}",
                sentences=[f"{name} residents enjoy mild summers.", *transport[i], FILLER_SENTENCE],
                population=population,
                area_sq_mi=area,
                lat=round(float(rng.uniform(-60, 70)), 4),
                lon=round(float(rng.uniform(-180, 180)), 4),
                typology_label=label,
                via_city=bool(rng.random() < via_p),
            )
        )
    return records


def render_page(record: CityRecord) -> str:
    """
    Wikitext einer synthetischen Stadt.

    Infobox mit Einwohnern, Fläche in km² und Koordinaten; Fußnoten und
    ein Referenzabschnitt, die beim Parsen verschwinden müssen.
    """
    area_km2 = (record.area_sq_mi or 1.0) / SQ_MI_PER_SQ_KM
    lead, *body = record.sentences
    lines = [
        "{{Infobox settlement",
        f"| name = {record.name}",
        f"| population_total = {{{{formatnum:{int(record.population or 0)}}}}}",
        f"| area_total_km2 = {area_km2:.6f}",
        f"| coordinates = {{{{coord|{record.lat}|{record.lon}|display=inline,title}}}}",
        "}}",
        f"{lead}<ref>Synthetic census.</ref>",
        "",
        "== Transport ==",
        " ".join(f"{sentence}[{n}]" for n, sentence in enumerate(body, start=1)),
        "",
        "== References ==",
        "<references />",
        "* Synthetic almanac. Vol. 1.",
        "",
        "[[Category:Synthetic cities]]",
    ]
    return "\n".join(lines) + "\n"


# =============================================================================
# Demo Workspace
# =============================================================================

_FETCHED_AT = datetime(2024, 1, 1, tzinfo=timezone.utc)


def write_workspace(
    root: Path | str,
    *,
    n_cities: int = 80,
    seed: int = 0,
    split_seed: int = 7,
    extra_cities: int = 0,
) -> Path:
    """
    Schreibt einen lauffähigen Offline-Workspace und liefert den Config-Pfad.

    Enthält Page-Cache, Datensatz, Via-Liste, Vokabular und wikityp.yaml.
    Mit extra_cities > 0 entsteht zusätzlich eine City-Liste aus
    ungelabelten Städten für die Batch-Vorhersage.
    """
    root = Path(root)
    records = generate_corpus(n_cities + extra_cities, seed=seed)
    labeled, extra = records[:n_cities], records[n_cities:]

    cache = PageCache(root / "cache" / "pages")
    for record in records:
        page = RawPage(url=record.url, markup=render_page(record), fetched_at=_FETCHED_AT, title=record.name)
        cache.write(cache_key(record.url, record.city_id), page)

    write_dataset(root / "dataset.csv", labeled)
    via_lines = [f"{r.name} {r.url}" for r in labeled if r.via_city]
    (root / "via_cities.txt").write_text("\n".join(["# Via-Städte", *via_lines]) + "\n", encoding="utf-8")
    write_vocabulary(root / "vocabulary.yaml")

    data = {
        "dataset": "dataset.csv",
        "via_list": "via_cities.txt",
        "page_cache": "cache/pages",
        "embedding_cache": "cache/embeddings",
    }
    if extra:
        unlabeled = [r.model_copy(update={"typology_label": None, "via_city": None}) for r in extra]
        write_dataset(root / "cities.csv", [*labeled, *unlabeled])
        data["city_list"] = "cities.csv"

    config = {
        "schema_version": 1,
        "data": data,
        "output_dir": "artifacts",
        "fetch": {"offline": True},
        "encoder": {
            "kind": "fixture",
            "model": "synthetic",
            "dimension": SYNTHETIC_DIMENSION,
            "vocabulary": "vocabulary.yaml",
            "unknown_tokens": "zero",
        },
        "split": {"train_fraction": 0.7, "seed": split_seed},
    }

    path = root / "wikityp.yaml"
    with open(path, "w", encoding="utf-8") as f:
        yaml.safe_dump(config, f, sort_keys=False)
    return path
