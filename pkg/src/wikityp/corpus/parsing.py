"""
Wikityp Page Parsing

Extrahiert bereinigte Sätze aus dem Artikeltext und numerische
Werte (Einwohner, Fläche, Dichte, Koordinaten) aus der Infobox.
"""

from __future__ import annotations

import re

import mwparserfromhell
import structlog
from mwparserfromhell.nodes import Comment, Tag, Template
from mwparserfromhell.wikicode import Wikicode

from wikityp.corpus.models import InfoboxNumerics, RawPage
from wikityp.errors import EmptyArticleError
from wikityp.knowledge.defaults import SQ_MI_PER_SQ_KM

logger = structlog.get_logger(__name__)

# Abschnitte ohne Fließtext über die Stadt
EXCLUDED_SECTIONS = frozenset({
    "references",
    "external links",
    "see also",
    "notes",
    "further reading",
    "bibliography",
    "sources",
    "citations",
    "footnotes",
    "notes and references",
})

# Tags deren Inhalt nie Fließtext ist
DROPPED_TAGS = frozenset({"ref", "references", "gallery", "table", "math", "timeline", "imagemap", "score"})

DROPPED_LINK_PREFIXES = ("file:", "image:", "category:", "media:")

ABBREVIATIONS = frozenset({
    "mr", "mrs", "ms", "dr", "prof", "st", "mt", "ft", "jr", "sr", "no", "nos", "vs",
    "etc", "e.g", "i.e", "approx", "u.s", "u.k", "u.n", "gen", "gov", "sen", "rep",
    "lt", "col", "capt", "sgt", "ave", "blvd", "rd", "inc", "co", "corp", "ltd", "est",
    "fig", "jan", "feb", "mar", "apr", "aug", "sep", "sept", "oct", "nov", "dec",
    "a.d", "b.c", "pp", "vol",
})

_CITATION_MARKER = re.compile(
    r"\[\s*(?:\d+|[a-z]|note\s*\d+|nb\s*\d+|citation needed|clarification needed|when\?|who\?)\s*\]",
    re.IGNORECASE,
)
_INLINE_HEADING = re.compile(r"={2,}[^=\n]*={2,}")
_HEADING_LINE = re.compile(r"^\s*=+.*=+\s*$")
_WHITESPACE = re.compile(r"\s+")
_SPACE_BEFORE_PUNCT = re.compile(r"\s+([,.;:!?])")
_BOUNDARY = re.compile(r"([.!?])([\"'”’)\]]*)\s+(?=[\"“(]?[A-Z])")
_LAST_TOKEN = re.compile(r"(\S+)$")


# =============================================================================
# Sentences
# =============================================================================


def split_sentences(text: str) -> list[str]:
    """
    Zerlegt einen Absatz in Sätze.

    Grenze = Satzzeichen + Leerraum + Großbuchstabe, außer nach einer
    Abkürzung aus ABBREVIATIONS.
    """
    sentences: list[str] = []
    start = 0
    for match in _BOUNDARY.finditer(text):
        token_match = _LAST_TOKEN.search(text[start:match.start(1)])
        token = token_match.group(1).lstrip("(\"'“").lower() if token_match else ""
        if token in ABBREVIATIONS:
            continue
        end = match.end(2)
        sentence = text[start:end].strip()
        if sentence:
            sentences.append(sentence)
        start = match.end()

    tail = text[start:].strip()
    if tail:
        sentences.append(tail)
    return sentences


def clean_paragraph(text: str) -> str:
    """Entfernt Zitationsmarker und Inline-Überschriften, normalisiert Leerraum."""
    text = _CITATION_MARKER.sub("", text)
    text = _INLINE_HEADING.sub(" ", text)
    text = _WHITESPACE.sub(" ", text)
    text = _SPACE_BEFORE_PUNCT.sub(r"\1", text)
    return text.strip()


def _heading_info(section: Wikicode) -> tuple[str, int] | None:
    headings = section.filter_headings(recursive=False)
    if not headings:
        return None
    heading = headings[0]
    return heading.title.strip_code().strip().lower(), heading.level


def _strip_non_prose(section: Wikicode) -> None:
    """Entfernt Überschriften, Referenzen, Tabellen und Datei-/Kategorie-Links."""
    doomed = [h for h in section.filter_headings(recursive=False)]
    doomed += [
        tag for tag in section.filter_tags()
        if str(tag.tag).strip().lower() in DROPPED_TAGS
    ]
    doomed += [
        link for link in section.filter_wikilinks()
        if str(link.title).strip().lower().startswith(DROPPED_LINK_PREFIXES)
    ]
    for node in doomed:
        try:
            section.remove(node)
        except ValueError:
            # bereits mit dem Elternknoten entfernt
            pass


def _body_paragraphs(markup: str) -> list[str]:
    code = mwparserfromhell.parse(markup)
    paragraphs: list[str] = []
    skip_below: int | None = None

    for section in code.get_sections(flat=True, include_lead=True):
        info = _heading_info(section)
        if info is not None:
            title, level = info
            if skip_below is not None and level > skip_below:
                continue
            skip_below = None
            if title in EXCLUDED_SECTIONS:
                skip_below = level
                continue

        _strip_non_prose(section)
        text = section.strip_code(normalize=True, collapse=True)
        for line in text.splitlines():
            stripped = line.strip()
            if not stripped or _HEADING_LINE.match(stripped):
                continue
            if stripped.startswith(("{|", "|", "!")):
                continue
            paragraph = clean_paragraph(stripped)
            if paragraph:
                paragraphs.append(paragraph)

    return paragraphs


def extract_sentences(page: RawPage | str) -> list[str]:
    """
    Alle Sätze aus allen Abschnitten in Dokumentreihenfolge.

    Überschriften, Fußnoten, Referenzabschnitte und Zitationsmarker
    werden entfernt.

    Raises:
        EmptyArticleError: Seite ohne Absätze
    """
    markup = page.markup if isinstance(page, RawPage) else page
    sentences: list[str] = []
    for paragraph in _body_paragraphs(markup):
        sentences.extend(split_sentences(paragraph))

    if not sentences:
        url = page.url if isinstance(page, RawPage) else None
        raise EmptyArticleError(f"no body paragraphs in page {url or ''}".strip())
    return sentences


# =============================================================================
# Infobox
# =============================================================================

POPULATION_FIELDS = ("population_total", "population", "population_city", "population_est")

# (Feldname, Einheit) - None = Einheit aus dem Wert lesen
AREA_FIELDS: tuple[tuple[str, str | None], ...] = (
    ("area_total_sq_mi", "mi"),
    ("area_total_km2", "km"),
    ("area_city_sq_mi", "mi"),
    ("area_city_km2", "km"),
    ("area_land_sq_mi", "mi"),
    ("area_land_km2", "km"),
    ("area_sq_mi", "mi"),
    ("area_km2", "km"),
    ("area_total", None),
    ("area", None),
)

DENSITY_FIELDS: tuple[tuple[str, str | None], ...] = (
    ("population_density_sq_mi", "mi"),
    ("population_density_km2", "km"),
    ("population_density", None),
    ("density", None),
)

_NUMBER = re.compile(r"[-+]?\d[\d,]*(?:\.\d+)?")
_KM_UNIT = re.compile(r"km2|km²|km\^2|sq\.?\s*km|square\s+kilomet|PD/km", re.IGNORECASE)
_MI_UNIT = re.compile(r"sq\.?\s*mi|sqmi|mi2|mi²|square\s+mile|PD/sqmi", re.IGNORECASE)
_HEMISPHERES = {"N": 1.0, "S": -1.0, "E": 1.0, "W": -1.0}


def parse_number(text: str) -> float | None:
    """Erste Zahl im Text, Tausendertrennzeichen werden entfernt."""
    match = _NUMBER.search(text)
    if match is None:
        return None
    try:
        return float(match.group().replace(",", ""))
    except ValueError:
        return None


def detect_area_unit(text: str) -> str | None:
    """'km' oder 'mi' je nach Einheit im Text."""
    if _KM_UNIT.search(text):
        return "km"
    if _MI_UNIT.search(text):
        return "mi"
    return None


def _positional(template: Template) -> list[str]:
    return [str(p.value).strip() for p in template.params if not p.showkey]


def _render_template(template: Template) -> str:
    name = str(template.name).strip()
    lname = name.lower()
    if lname.startswith("formatnum:"):
        return name.split(":", 1)[1]
    if lname in ("convert", "cvt"):
        args = _positional(template)
        return " ".join(args[:2])
    if lname in ("nowrap", "nobr", "small", "abbr") and template.params:
        return render_value(template.params[0].value)
    return ""


def render_value(code: Wikicode) -> str:
    """Klartext eines Infobox-Werts; convert/formatnum bleiben erhalten."""
    parts: list[str] = []
    for node in code.nodes:
        if isinstance(node, Template):
            parts.append(_render_template(node))
        elif isinstance(node, Comment):
            continue
        elif isinstance(node, Tag):
            tag = str(node.tag).strip().lower()
            if tag in DROPPED_TAGS:
                continue
            if tag == "br":
                parts.append(" ")
            elif node.contents is not None:
                parts.append(render_value(node.contents))
        else:
            parts.append(mwparserfromhell.parse(str(node)).strip_code(normalize=True))
    return _WHITESPACE.sub(" ", "".join(parts)).strip()


def _dms(parts: list[str]) -> float:
    values = [float(p) for p in parts if p]
    degrees = values[0] if values else 0.0
    minutes = values[1] if len(values) > 1 else 0.0
    seconds = values[2] if len(values) > 2 else 0.0
    return degrees + minutes / 60.0 + seconds / 3600.0


def parse_coord(template: Template) -> tuple[float, float] | None:
    """
    Liest {{coord|...}} in Dezimal- oder Grad/Minuten/Sekunden-Form.

    Returns:
        (lat, lon) oder None wenn nicht lesbar
    """
    args = [a for a in _positional(template) if "=" not in a]
    try:
        ns_index = next(i for i, a in enumerate(args) if a.upper() in ("N", "S"))
    except StopIteration:
        ns_index = None

    try:
        if ns_index is None:
            return float(args[0]), float(args[1])
        ew_index = next(
            i for i, a in enumerate(args) if i > ns_index and a.upper() in ("E", "W")
        )
        lat = _dms(args[:ns_index]) * _HEMISPHERES[args[ns_index].upper()]
        lon = _dms(args[ns_index + 1:ew_index]) * _HEMISPHERES[args[ew_index].upper()]
        return lat, lon
    except (ValueError, IndexError, StopIteration):
        return None


def _coords_from_fields(params: dict[str, Wikicode]) -> tuple[float, float] | None:
    """latd/latm/lats/latNS + longd/longm/longs/longEW Felder."""
    if "latd" not in params or "longd" not in params:
        return None
    try:
        lat = _dms([render_value(params.get(k, mwparserfromhell.parse(""))) for k in ("latd", "latm", "lats")])
        lon = _dms([render_value(params.get(k, mwparserfromhell.parse(""))) for k in ("longd", "longm", "longs")])
    except ValueError:
        return None
    if render_value(params.get("latns", mwparserfromhell.parse("N"))).upper().startswith("S"):
        lat = -lat
    if render_value(params.get("longew", mwparserfromhell.parse("E"))).upper().startswith("W"):
        lon = -lon
    return lat, lon


def _find_infobox(code: Wikicode) -> Template | None:
    for template in code.filter_templates(recursive=False):
        if str(template.name).strip().lower().startswith("infobox"):
            return template
    return None


def _read_area_like(
    params: dict[str, Wikicode],
    fields: tuple[tuple[str, str | None], ...],
    label: str,
) -> tuple[float, str] | None:
    for name, unit in fields:
        if name not in params:
            continue
        text = render_value(params[name])
        if not text or text.lower() == "auto":
            continue
        value = parse_number(text)
        resolved_unit = unit or detect_area_unit(text)
        if value is None or value <= 0 or resolved_unit is None:
            logger.warning("infobox_parse_warning", field=name, value=text, kind=label)
            continue
        return value, resolved_unit
    return None


def extract_infobox_numerics(page: RawPage | str) -> InfoboxNumerics:
    """
    Einwohner, Fläche (sq mi), Dichte (pro sq mi) und Koordinaten.

    km-Angaben werden umgerechnet, fehlende Dichte aus Einwohner/Fläche
    berechnet. Keine Infobox ist kein Fehler.
    """
    markup = page.markup if isinstance(page, RawPage) else page
    code = mwparserfromhell.parse(markup)
    infobox = _find_infobox(code)

    population: float | None = None
    area_sq_mi: float | None = None
    density: float | None = None
    coords: tuple[float, float] | None = None

    if infobox is not None:
        params = {str(p.name).strip().lower(): p.value for p in infobox.params if p.showkey}

        for name in POPULATION_FIELDS:
            if name not in params:
                continue
            text = render_value(params[name])
            value = parse_number(text)
            if value is None or value <= 0:
                logger.warning("infobox_parse_warning", field=name, value=text, kind="population")
                continue
            population = value
            break

        area = _read_area_like(params, AREA_FIELDS, "area")
        if area is not None:
            value, unit = area
            area_sq_mi = value * SQ_MI_PER_SQ_KM if unit == "km" else value

        dens = _read_area_like(params, DENSITY_FIELDS, "density")
        if dens is not None:
            value, unit = dens
            density = value / SQ_MI_PER_SQ_KM if unit == "km" else value

        for name in ("coordinates", "coords", "coord"):
            if name in params:
                for template in params[name].filter_templates():
                    if str(template.name).strip().lower() == "coord":
                        coords = parse_coord(template)
                        break
            if coords is not None:
                break
        if coords is None:
            coords = _coords_from_fields(params)

    if coords is None:
        for template in code.filter_templates():
            if str(template.name).strip().lower() == "coord":
                coords = parse_coord(template)
                if coords is not None:
                    break

    if density is None and population is not None and area_sq_mi is not None:
        density = population / area_sq_mi

    lat, lon = coords if coords is not None else (None, None)
    if lat is not None and not (-90 <= lat <= 90 and -180 <= lon <= 180):
        logger.warning("infobox_parse_warning", field="coordinates", value=str(coords))
        lat, lon = None, None

    return InfoboxNumerics(
        population=population,
        area_sq_mi=area_sq_mi,
        density_per_sq_mi=density,
        lat=lat,
        lon=lon,
    )
