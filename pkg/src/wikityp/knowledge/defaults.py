"""
Wikityp Knowledge Base - Default Values

Anchor-Texte, kanonische Reihenfolgen und die Teilmengen des Feature-Sweeps.
"""

from wikityp.knowledge.schemas import (
    DENSITY_COLUMN,
    KeylineStage,
    Typology,
    feature_column,
)

# =============================================================================
# Anchor Texts
# =============================================================================

ANCHOR_TEXTS: dict[Typology, str] = {
    Typology.CONGESTION: "the city has heavy traffic congestion",
    Typology.AUTO: "most people in the city use cars",
    Typology.TRANSIT: "most people in the city use public transit like bus and metro",
    Typology.BIKE: "many people in the city use bike or cycle",
}

# Reihenfolge der Keyline-Features im Feature-Vektor
TYPOLOGY_ORDER: list[Typology] = [
    Typology.CONGESTION,
    Typology.AUTO,
    Typology.TRANSIT,
    Typology.BIKE,
]

# Bei Dezimal-Dichte-Werten in km²
SQ_MI_PER_SQ_KM = 0.386102


# =============================================================================
# Feature Sweep
# =============================================================================


def subset_layouts(task: Typology) -> list[tuple[str, ...]]:
    """
    Die 21 Merkmals-Teilmengen des Sweeps für eine Typologie.

    Zeile 0 ist die Baseline (alle vier Features nur aus Anchor-Texten).
    Die übrigen Typologien erscheinen in kanonischer Reihenfolge.
    """
    others = [t for t in TYPOLOGY_ORDER if t is not task]
    init = KeylineStage.INITIAL
    opt = KeylineStage.OPTIMAL

    task_init = feature_column(task, init)
    task_opt = feature_column(task, opt)
    task_all = feature_column(task, KeylineStage.ALL)
    others_init = tuple(feature_column(t, init) for t in others)
    o1, o2, o3 = (feature_column(t, opt) for t in others)

    keyline_combos: list[tuple[str, ...]] = [
        (task_opt,),
        (task_opt, o1),
        (task_opt, o2),
        (task_opt, o3),
        (task_opt, o1, o2),
        (task_opt, o1, o3),
        (task_opt, o2, o3),
        (task_opt, o1, o2, o3),
    ]

    layouts: list[tuple[str, ...]] = [
        (task_init, *others_init),
        (task_opt, *others_init),
        (task_all, *others_init),
        *keyline_combos,
        (DENSITY_COLUMN,),
        (task_opt, DENSITY_COLUMN),
        (task_opt, *others_init, DENSITY_COLUMN),
        *[(*combo, DENSITY_COLUMN) for combo in keyline_combos[1:]],
    ]
    return layouts
