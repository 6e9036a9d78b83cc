"""Comparison statistics: Spearman, Pearson, MSE and correlation matrices"""

import logging
from dataclasses import dataclass, asdict
from typing import Dict, Sequence, Any

import numpy as np
import pandas as pd
from scipy.stats import rankdata

from ..core.exceptions import MetricError

logger = logging.getLogger(__name__)

# Static footnote for inverse tables; correlations are not significance-tested
SIGNIFICANCE_FOOTNOTE = (
    "Correlations of magnitude >= .3 are statistically significant at alpha = .05; "
    "magnitudes >= .47 at alpha = .001."
)


@dataclass
class CorrelationReport:
    spearman: float
    pearson: float
    mse: float
    n: int

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


def _pair(x: Sequence[float], y: Sequence[float], min_length: int):
    a = np.asarray(x, dtype=float)
    b = np.asarray(y, dtype=float)
    if a.shape != b.shape or a.ndim != 1:
        raise MetricError("Vectors must be one-dimensional and equally long", f"{a.shape} vs {b.shape}")
    if len(a) < min_length:
        raise MetricError(f"At least {min_length} values are required", str(len(a)))
    return a, b


def pearson(x: Sequence[float], y: Sequence[float]) -> float:
    """Product-moment correlation

    Raises:
        MetricError: Unequal lengths, or a constant vector (undefined correlation)
    """
    a, b = _pair(x, y, 2)
    da = a - a.mean()
    db = b - b.mean()
    denom = np.sqrt(np.dot(da, da) * np.dot(db, db))
    if denom == 0.0:
        raise MetricError("Correlation undefined for a constant vector")
    return float(np.clip(np.dot(da, db) / denom, -1.0, 1.0))


def spearman(x: Sequence[float], y: Sequence[float]) -> float:
    """Pearson correlation of the midrank-transformed vectors"""
    a, b = _pair(x, y, 3)
    return pearson(rankdata(a, method="average"), rankdata(b, method="average"))


def mse(x: Sequence[float], y: Sequence[float]) -> float:
    a, b = _pair(x, y, 1)
    return float(np.mean((a - b) ** 2))


def compare(x: Sequence[float], y: Sequence[float]) -> CorrelationReport:
    """All three statistics for one pair of vectors"""
    return CorrelationReport(spearman=spearman(x, y), pearson=pearson(x, y), mse=mse(x, y), n=len(x))


def correlation_matrix(vectors: Dict[str, Sequence[float]], method: str = "spearman") -> pd.DataFrame:
    """Symmetric matrix of pairwise correlations, unit diagonal

    Args:
        vectors: Named vectors of equal length
        method: "spearman" or "pearson"
    """
    fn = {"spearman": spearman, "pearson": pearson}.get(method)
    if fn is None:
        raise MetricError("Unknown correlation method", method)
    names = list(vectors)
    lengths = {len(vectors[n]) for n in names}
    if len(lengths) > 1:
        raise MetricError("All vectors must have the same length", str(sorted(lengths)))

    matrix = np.eye(len(names))
    for i in range(len(names)):
        for j in range(i + 1, len(names)):
            matrix[i, j] = matrix[j, i] = fn(vectors[names[i]], vectors[names[j]])
    return pd.DataFrame(matrix, index=names, columns=names)
