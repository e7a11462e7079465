"""Knowledge Base - Typologien, Anchor-Texte, Sweep-Teilmengen."""

from wikityp.knowledge.loader import KnowledgeBase, KnowledgeBaseError
from wikityp.knowledge.schemas import (
    DENSITY_COLUMN,
    KeylineStage,
    LabelTask,
    Typology,
    feature_column,
    parse_feature_column,
)

__all__ = [
    "DENSITY_COLUMN",
    "KeylineStage",
    "KnowledgeBase",
    "KnowledgeBaseError",
    "LabelTask",
    "Typology",
    "feature_column",
    "parse_feature_column",
]
