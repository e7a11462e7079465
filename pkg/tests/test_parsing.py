"""Tests für Satz- und Infobox-Extraktion."""

from __future__ import annotations

import pytest

from wikityp.corpus.models import CityRecord
from wikityp.corpus.parsing import (
    clean_paragraph,
    extract_infobox_numerics,
    extract_sentences,
    parse_number,
    split_sentences,
)
from wikityp.corpus.synthetic import render_page
from wikityp.errors import EmptyArticleError
from wikityp.knowledge.defaults import SQ_MI_PER_SQ_KM

ARTICLE = """{{Infobox settlement
| name = Exampleton
| population_total = {{formatnum:1250000}}
| area_total_sq_mi = 250
| coordinates = {{coord|40|42|46|N|74|00|22|W|display=inline,title}}
}}
'''Exampleton''' is a city in [[Nowhere]].<ref>Census 2020.</ref> It has 1.25 million residents.

== History ==
Dr. Miller founded the town in 1850. The port grew quickly.[3]

=== Modern era ===
Traffic congestion is severe.[citation needed] Buses run every ten minutes.

== Transport ==
[[File:Tram.jpg|thumb|A tram]]
{| class="wikitable"
|-
| Line 1 || Downtown
|}
Trams serve the old town.

== See also ==
* [[List of cities]]

=== Sister cities ===
Sister cities are listed here.

== References ==
{{reflist}}

== External links ==
* [https://example.org Official site]

[[Category:Cities]]
"""


class TestSentenceSplitting:
    def test_splits_on_terminal_punctuation(self) -> None:
        assert split_sentences("Cars dominate. Trains are rare! Why? Nobody knows.") == [
            "Cars dominate.",
            "Trains are rare!",
            "Why?",
            "Nobody knows.",
        ]

    def test_abbreviations_do_not_end_sentences(self) -> None:
        text = "Dr. Smith lives on Main St. Springfield. He cycles daily."
        assert split_sentences(text) == [
            "Dr. Smith lives on Main St. Springfield.",
            "He cycles daily.",
        ]

    def test_lowercase_continuation_is_not_a_boundary(self) -> None:
        assert split_sentences("The U.S. economy grew. Prices rose.") == [
            "The U.S. economy grew.",
            "Prices rose.",
        ]

    def test_closing_quote_stays_with_sentence(self) -> None:
        assert split_sentences('He said "stop." Then he left.') == ['He said "stop."', "Then he left."]

    def test_clean_paragraph_removes_citation_markers(self) -> None:
        assert clean_paragraph("Traffic is heavy.[1] Buses run.[citation needed]  ") == (
            "Traffic is heavy. Buses run."
        )


class TestExtractSentences:
    def test_body_sentences_in_document_order(self) -> None:
        sentences = extract_sentences(ARTICLE)
        assert sentences == [
            "Exampleton is a city in Nowhere.",
            "It has 1.25 million residents.",
            "Dr. Miller founded the town in 1850.",
            "The port grew quickly.",
            "Traffic congestion is severe.",
            "Buses run every ten minutes.",
            "Trams serve the old town.",
        ]

    def test_excluded_sections_and_subsections_are_dropped(self) -> None:
        text = " ".join(extract_sentences(ARTICLE))
        assert "Sister cities" not in text
        assert "Official site" not in text
        assert "Census" not in text
        assert "==" not in text

    def test_page_without_body_raises(self) -> None:
        with pytest.raises(EmptyArticleError):
            extract_sentences("{{Infobox settlement|name=X}}\n== References ==\n* A book.\n")

    def test_synthetic_page_reproduces_sentences(self, synthetic_records: list[CityRecord]) -> None:
        for record in synthetic_records[:8]:
            assert extract_sentences(render_page(record)) == record.sentences


class TestInfobox:
    def test_population_area_density_and_coordinates(self) -> None:
        numerics = extract_infobox_numerics(ARTICLE)
        assert numerics.population == 1_250_000
        assert numerics.area_sq_mi == 250
        assert numerics.density_per_sq_mi == pytest.approx(5000.0)
        assert numerics.lat == pytest.approx(40 + 42 / 60 + 46 / 3600)
        assert numerics.lon == pytest.approx(-(74 + 22 / 3600))

    def test_km_values_are_converted(self) -> None:
        markup = (
            "{{Infobox settlement\n| population_total = 400,000\n"
            "| area_total_km2 = 100\n| population_density_km2 = 4000\n}}\nText here.\n"
        )
        numerics = extract_infobox_numerics(markup)
        assert numerics.area_sq_mi == pytest.approx(100 * SQ_MI_PER_SQ_KM)
        assert numerics.density_per_sq_mi == pytest.approx(4000 / SQ_MI_PER_SQ_KM)

    @pytest.mark.parametrize("area_km2", [0.75, 12.5, 303.0, 1463.6, 6340.5])
    def test_area_round_trip_through_square_miles(self, area_km2: float) -> None:
        to_miles = f"{{{{Infobox settlement\n| area_total_km2 = {area_km2}\n}}}}\nText.\n"
        area_sq_mi = extract_infobox_numerics(to_miles).area_sq_mi
        assert area_sq_mi is not None

        as_miles = f"{{{{Infobox settlement\n| area_total_sq_mi = {area_sq_mi:.12f}\n}}}}\nText.\n"
        again = extract_infobox_numerics(as_miles).area_sq_mi
        assert again == pytest.approx(area_sq_mi, abs=1e-9)
        assert abs(again / SQ_MI_PER_SQ_KM - area_km2) <= 1e-6

    def test_convert_template_with_unit(self) -> None:
        markup = "{{Infobox settlement\n| area_total = {{convert|50|km2|sqmi}}\n}}\nText.\n"
        assert extract_infobox_numerics(markup).area_sq_mi == pytest.approx(50 * SQ_MI_PER_SQ_KM)

    def test_decimal_coord_and_latd_fields(self) -> None:
        decimal = "{{Infobox settlement\n| coordinates = {{coord|-33.86|151.21}}\n}}\n"
        assert extract_infobox_numerics(decimal).lat == pytest.approx(-33.86)
        fields = (
            "{{Infobox settlement\n| latd = 52 | latm = 30 | latNS = N\n"
            "| longd = 13 | longm = 24 | longEW = E\n}}\n"
        )
        numerics = extract_infobox_numerics(fields)
        assert numerics.lat == pytest.approx(52.5)
        assert numerics.lon == pytest.approx(13.4)

    def test_malformed_values_become_missing(self) -> None:
        markup = "{{Infobox settlement\n| population_total = unknown\n| area_total = large\n}}\n"
        numerics = extract_infobox_numerics(markup)
        assert numerics.population is None
        assert numerics.area_sq_mi is None
        assert numerics.density_per_sq_mi is None

    def test_page_without_infobox(self) -> None:
        numerics = extract_infobox_numerics("Just prose. Nothing else.")
        assert numerics.model_dump() == {
            "population": None,
            "area_sq_mi": None,
            "density_per_sq_mi": None,
            "lat": None,
            "lon": None,
        }

    def test_synthetic_infobox(self, synthetic_records: list[CityRecord]) -> None:
        record = synthetic_records[3]
        numerics = extract_infobox_numerics(render_page(record))
        assert numerics.population == record.population
        assert numerics.area_sq_mi == pytest.approx(record.area_sq_mi, rel=1e-6)
        assert numerics.lat == pytest.approx(record.lat)
        assert numerics.lon == pytest.approx(record.lon)

    def test_parse_number(self) -> None:
        assert parse_number("8,336,817 (2020)") == 8336817
        assert parse_number("n/a") is None
