"""Bayesian inverse decision-making over the observed-decision catalog"""

from .models import (
    Item,
    ITEM_ORDER,
    NON_TARGET_ITEMS,
    Context,
    ScoreKind,
    DecisionStructure,
    PriorSpec,
    PreferenceScore,
    utility_vector,
)
from .catalog import (
    CATALOG_SIZE,
    NAIVE_DECISION,
    catalog_47,
    find_decision,
    export_catalog,
    import_catalog,
)
from .scoring import (
    luce_probs,
    luce_choice_prob,
    score_grid,
    score_mc,
    score_catalog,
    rank_decisions,
    load_human_ranking,
    prior_for,
)

__all__ = [
    "Item",
    "ITEM_ORDER",
    "NON_TARGET_ITEMS",
    "Context",
    "ScoreKind",
    "DecisionStructure",
    "PriorSpec",
    "PreferenceScore",
    "utility_vector",
    "CATALOG_SIZE",
    "NAIVE_DECISION",
    "catalog_47",
    "find_decision",
    "export_catalog",
    "import_catalog",
    "luce_probs",
    "luce_choice_prob",
    "score_grid",
    "score_mc",
    "score_catalog",
    "rank_decisions",
    "load_human_ranking",
    "prior_for",
]
