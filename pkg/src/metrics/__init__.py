"""Ranking aggregation and comparison statistics"""

from .ranking import Verdict, PairwiseOutcome, Ranking, aggregate_pairwise, mean_ranking
from .stats import (
    CorrelationReport,
    SIGNIFICANCE_FOOTNOTE,
    spearman,
    pearson,
    mse,
    compare,
    correlation_matrix,
)

__all__ = [
    "Verdict",
    "PairwiseOutcome",
    "Ranking",
    "aggregate_pairwise",
    "mean_ranking",
    "CorrelationReport",
    "SIGNIFICANCE_FOOTNOTE",
    "spearman",
    "pearson",
    "mse",
    "compare",
    "correlation_matrix",
]
