"""Corpus Module - Seitenabruf, Satz-/Infobox-Extraktion, Datensätze."""

from wikityp.corpus.dataset import (
    DensityNormalizer,
    build_split,
    load_dataset,
    normalize_density,
)
from wikityp.corpus.fetch import PageCache, PageFetcher
from wikityp.corpus.models import CityRecord, DatasetSplit, InfoboxNumerics, RawPage
from wikityp.corpus.parsing import extract_infobox_numerics, extract_sentences

__all__ = [
    "CityRecord",
    "DatasetSplit",
    "DensityNormalizer",
    "InfoboxNumerics",
    "PageCache",
    "PageFetcher",
    "RawPage",
    "build_split",
    "extract_infobox_numerics",
    "extract_sentences",
    "load_dataset",
    "normalize_density",
]
