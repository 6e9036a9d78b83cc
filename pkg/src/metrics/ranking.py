"""Rankings with midrank ties and pairwise win-count aggregation"""

import logging
from dataclasses import dataclass
from enum import Enum
from typing import List, Hashable, Sequence, Union

import numpy as np
from scipy.stats import rankdata

from ..core.exceptions import MetricError

logger = logging.getLogger(__name__)


class Verdict(Enum):
    FIRST_STRONGER = "first-stronger"
    SECOND_STRONGER = "second-stronger"
    TIE = "tie"


@dataclass(frozen=True)
class PairwiseOutcome:
    """One judged pair: which of two items shows the stronger preference"""
    first: Hashable
    second: Hashable
    verdict: Verdict

    def __post_init__(self):
        if self.first == self.second:
            raise MetricError("A pair must compare two different items", str(self.first))

    @property
    def key(self) -> frozenset:
        return frozenset((self.first, self.second))


@dataclass
class Ranking:
    """Items with a score each, higher is stronger; rank 1 is the strongest

    Equal scores share the average of the ranks they span.
    """
    ids: List[Hashable]
    scores: np.ndarray

    def __post_init__(self):
        self.scores = np.asarray(self.scores, dtype=float)
        if len(self.ids) != len(self.scores):
            raise MetricError("Ranking ids and scores differ in length")
        if len(set(self.ids)) != len(self.ids):
            raise MetricError("Ranking ids must be unique")

    @property
    def ranks(self) -> np.ndarray:
        return rankdata(-self.scores, method="average")

    def rank_of(self, item: Hashable) -> float:
        return float(self.ranks[self.ids.index(item)])

    def score_of(self, item: Hashable) -> float:
        return float(self.scores[self.ids.index(item)])

    def ordered(self) -> List[Hashable]:
        """Ids from strongest to weakest, stable on ties"""
        order = np.argsort(-self.scores, kind="stable")
        return [self.ids[i] for i in order]


def aggregate_pairwise(
    outcomes: Sequence[PairwiseOutcome],
    items: Union[int, Sequence[Hashable]],
) -> Ranking:
    """Win-count aggregation: one point per win, half a point per tie

    Args:
        outcomes: Judged pairs; each unordered pair at most once
        items: Item ids, or a count n meaning ids 0..n-1

    Returns:
        Ranking: by win score, midranks on ties. Cycles are not repaired.

    Raises:
        MetricError: Fewer than two items, duplicate pair, or unknown id
    """
    ids = list(range(items)) if isinstance(items, int) else list(items)
    if len(ids) < 2:
        raise MetricError("Aggregation needs at least two items", str(len(ids)))
    index = {item: i for i, item in enumerate(ids)}
    wins = np.zeros(len(ids))
    seen = set()

    for outcome in outcomes:
        for item in (outcome.first, outcome.second):
            if item not in index:
                raise MetricError("Pairwise outcome names an unknown item", str(item))
        if outcome.key in seen:
            raise MetricError("Pair judged more than once", f"{outcome.first} vs {outcome.second}")
        seen.add(outcome.key)

        i, j = index[outcome.first], index[outcome.second]
        if outcome.verdict is Verdict.FIRST_STRONGER:
            wins[i] += 1.0
        elif outcome.verdict is Verdict.SECOND_STRONGER:
            wins[j] += 1.0
        else:
            wins[i] += 0.5
            wins[j] += 0.5

    total_pairs = len(ids) * (len(ids) - 1) // 2
    if len(seen) < total_pairs:
        logger.debug(f"Aggregated {len(seen)} of {total_pairs} pairs")
    return Ranking(ids, wins)


def mean_ranking(rankings: Sequence[Ranking]) -> Ranking:
    """Average the scores of several rankings over the same ids, then re-rank"""
    if not rankings:
        raise MetricError("No rankings to average")
    ids = rankings[0].ids
    for r in rankings[1:]:
        if r.ids != ids:
            raise MetricError("Rankings to average must share their ids in order")
    return Ranking(list(ids), np.mean([r.scores for r in rankings], axis=0))
