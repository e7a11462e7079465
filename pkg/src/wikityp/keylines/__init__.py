"""Keylines Module - Keyline-Features, Kandidaten, Greedy-Erweiterung."""

from wikityp.keylines.expansion import ExpansionResult, TrajectoryPoint, expand_keylines
from wikityp.keylines.features import (
    Evidence,
    FeatureVector,
    assemble_features,
    build_anchors,
    collect_candidates,
    explain_feature,
    extract_candidate,
    feature_vector,
    keyline_feature,
)
from wikityp.keylines.schemas import AnchorText, Candidate, CandidateList, Keyline, KeylineSet

__all__ = [
    "AnchorText",
    "Candidate",
    "CandidateList",
    "Evidence",
    "ExpansionResult",
    "FeatureVector",
    "Keyline",
    "KeylineSet",
    "TrajectoryPoint",
    "assemble_features",
    "build_anchors",
    "collect_candidates",
    "expand_keylines",
    "explain_feature",
    "extract_candidate",
    "feature_vector",
    "keyline_feature",
]
