"""Risky-choice data model - gambles, problems and observed human proportions"""

import math
from dataclasses import dataclass, field
from typing import List, Dict, Any, Iterator, Tuple

import numpy as np

from ..core.exceptions import ValidationError

# Sum-to-one tolerance for probabilities
PROB_TOLERANCE = 1e-9

# choices13k problems were answered by at least this many participants
MIN_PARTICIPANTS = 15


@dataclass(frozen=True)
class Gamble:
    """A single gamble: parallel payoff (dollars) and probability lists"""

    payoffs: Tuple[float, ...]
    probs: Tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "payoffs", tuple(float(x) for x in self.payoffs))
        object.__setattr__(self, "probs", tuple(float(q) for q in self.probs))
        self.validate()

    def validate(self) -> None:
        """Check the gamble invariants, raising ValidationError on failure"""
        if not self.payoffs:
            raise ValidationError("Gamble has no outcomes")
        if len(self.payoffs) != len(self.probs):
            raise ValidationError(
                "Payoff and probability lists differ in length",
                f"{len(self.payoffs)} payoffs, {len(self.probs)} probabilities",
            )
        if not all(math.isfinite(x) for x in self.payoffs):
            raise ValidationError("Gamble payoffs must be finite", str(self.payoffs))
        for q in self.probs:
            if not (0.0 <= q <= 1.0) or math.isnan(q):
                raise ValidationError("Probability outside [0, 1]", str(q))
        total = math.fsum(self.probs)
        if abs(total - 1.0) > PROB_TOLERANCE:
            raise ValidationError("Probabilities do not sum to 1", f"sum={total!r}")

    @property
    def n_outcomes(self) -> int:
        return len(self.payoffs)

    def scaled(self, k: float) -> "Gamble":
        """Same gamble with every payoff multiplied by k"""
        return Gamble(tuple(k * x for x in self.payoffs), self.probs)

    def pairs(self) -> List[Tuple[float, float]]:
        """(payoff, probability) pairs"""
        return list(zip(self.payoffs, self.probs))

    def to_dict(self) -> Dict[str, Any]:
        return {"payoffs": list(self.payoffs), "probs": list(self.probs)}

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "Gamble":
        return cls(tuple(data.get("payoffs", ())), tuple(data.get("probs", ())))


@dataclass(frozen=True)
class ChoiceProblem:
    """A forced choice between gamble A and gamble B"""

    id: str
    gamble_a: Gamble
    gamble_b: Gamble
    ambiguous: bool = False
    feedback: bool = True

    def swapped(self) -> "ChoiceProblem":
        """The same problem with the two gambles exchanged"""
        return ChoiceProblem(
            id=self.id,
            gamble_a=self.gamble_b,
            gamble_b=self.gamble_a,
            ambiguous=self.ambiguous,
            feedback=self.feedback,
        )

    def scaled(self, k: float) -> "ChoiceProblem":
        return ChoiceProblem(
            id=self.id,
            gamble_a=self.gamble_a.scaled(k),
            gamble_b=self.gamble_b.scaled(k),
            ambiguous=self.ambiguous,
            feedback=self.feedback,
        )


@dataclass(frozen=True)
class ChoiceObservation:
    """Observed human behaviour on one problem"""

    problem_id: str
    prop_a: float
    n_participants: int

    def __post_init__(self):
        if not (0.0 <= self.prop_a <= 1.0) or math.isnan(self.prop_a):
            raise ValidationError("Proportion choosing A outside [0, 1]", str(self.prop_a))
        if self.n_participants < 1:
            raise ValidationError("Participant count must be positive", str(self.n_participants))


@dataclass
class ChoiceDataset:
    """Ordered collection of (problem, observation) records with unique ids"""

    records: List[Tuple[ChoiceProblem, ChoiceObservation]] = field(default_factory=list)

    def __post_init__(self):
        seen = set()
        for problem, observation in self.records:
            if problem.id in seen:
                raise ValidationError("Duplicate problem id", problem.id)
            if observation.problem_id != problem.id:
                raise ValidationError(
                    "Observation does not belong to its problem",
                    f"{observation.problem_id} != {problem.id}",
                )
            seen.add(problem.id)

    def __len__(self) -> int:
        return len(self.records)

    def __iter__(self) -> Iterator[Tuple[ChoiceProblem, ChoiceObservation]]:
        return iter(self.records)

    @property
    def problems(self) -> List[ChoiceProblem]:
        return [p for p, _ in self.records]

    @property
    def observations(self) -> List[ChoiceObservation]:
        return [o for _, o in self.records]

    def human_proportions(self) -> np.ndarray:
        return np.array([o.prop_a for o in self.observations], dtype=float)

    def head(self, n: int) -> "ChoiceDataset":
        return ChoiceDataset(self.records[:n])


@dataclass
class ProblemBatch:
    """Padded numeric view of many problems, used by the vectorised models

    Rows are problems, columns are outcome slots; masked slots carry payoff 0
    and probability 0.
    """

    payoffs_a: np.ndarray
    probs_a: np.ndarray
    mask_a: np.ndarray
    payoffs_b: np.ndarray
    probs_b: np.ndarray
    mask_b: np.ndarray

    @classmethod
    def from_problems(cls, problems: List[ChoiceProblem]) -> "ProblemBatch":
        if not problems:
            raise ValidationError("Cannot build a batch from zero problems")
        xa, qa, ma = _pad([p.gamble_a for p in problems])
        xb, qb, mb = _pad([p.gamble_b for p in problems])
        return cls(xa, qa, ma, xb, qb, mb)

    def __len__(self) -> int:
        return self.payoffs_a.shape[0]

    def swapped(self) -> "ProblemBatch":
        return ProblemBatch(
            self.payoffs_b, self.probs_b, self.mask_b,
            self.payoffs_a, self.probs_a, self.mask_a,
        )

    def side(self, which: str) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        """(payoffs, probs, mask) for side "a" or "b" """
        if which == "a":
            return self.payoffs_a, self.probs_a, self.mask_a
        return self.payoffs_b, self.probs_b, self.mask_b


def _pad(gambles: List[Gamble]) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    width = max(g.n_outcomes for g in gambles)
    payoffs = np.zeros((len(gambles), width))
    probs = np.zeros((len(gambles), width))
    mask = np.zeros((len(gambles), width), dtype=bool)
    for i, g in enumerate(gambles):
        k = g.n_outcomes
        payoffs[i, :k] = g.payoffs
        probs[i, :k] = g.probs
        mask[i, :k] = True
    return payoffs, probs, mask
