"""Inverse decision-making data model - items, decision structures, priors and scores"""

from dataclasses import dataclass
from enum import Enum
from itertools import permutations
from typing import Tuple, Dict, Any, Optional

import numpy as np

from ..core.exceptions import ValidationError

MAX_OPTIONS = 5


class Item(Enum):
    """The five item types; X is the inference target"""
    X = "x"
    A = "a"
    B = "b"
    C = "c"
    D = "d"

    @property
    def index(self) -> int:
        return ITEM_ORDER.index(self)


# Column order of utility vectors
ITEM_ORDER: Tuple[Item, ...] = (Item.X, Item.A, Item.B, Item.C, Item.D)
NON_TARGET_ITEMS: Tuple[Item, ...] = ITEM_ORDER[1:]


class Context(Enum):
    POSITIVE = "positive"
    NEGATIVE = "negative"


class ScoreKind(Enum):
    ABSOLUTE = "absolute"
    RELATIVE = "relative"
    LIKELIHOOD = "likelihood"
    MARGINAL = "marginal"


@dataclass(frozen=True)
class DecisionStructure:
    """An observed choice: ordered options (sets of items) and the chosen index"""

    options: Tuple[Tuple[Item, ...], ...]
    chosen: int = 0
    id: str = ""

    def __post_init__(self):
        options = tuple(tuple(Item(i) if not isinstance(i, Item) else i for i in opt) for opt in self.options)
        object.__setattr__(self, "options", options)
        self.validate()

    def validate(self) -> None:
        if not 1 <= len(self.options) <= MAX_OPTIONS:
            raise ValidationError(f"A decision has 1 to {MAX_OPTIONS} options", str(len(self.options)))
        for opt in self.options:
            if not opt:
                raise ValidationError("Options must not be empty", self.id)
            if len(set(opt)) != len(opt):
                raise ValidationError("An item appears twice in one option", self.id)
        if not 0 <= self.chosen < len(self.options):
            raise ValidationError("Chosen index outside the option list", str(self.chosen))

    @classmethod
    def from_notation(cls, notation: str, id: str = "", chosen: int = 0) -> "DecisionStructure":
        """Parse "cbax|dbax": options separated by "|", one letter per item"""
        parts = [p.strip().lower() for p in notation.split("|")]
        try:
            options = tuple(tuple(Item(ch) for ch in part) for part in parts)
        except ValueError:
            raise ValidationError("Unknown item letter in decision", notation)
        return cls(options=options, chosen=chosen, id=id)

    @property
    def notation(self) -> str:
        return "|".join("".join(i.value for i in opt) for opt in self.options)

    @property
    def chosen_option(self) -> Tuple[Item, ...]:
        return self.options[self.chosen]

    @property
    def target_chosen(self) -> bool:
        return Item.X in self.chosen_option

    def membership(self) -> np.ndarray:
        """(n_options, 5) 0/1 matrix; option utility = membership @ u"""
        m = np.zeros((len(self.options), len(ITEM_ORDER)))
        for j, opt in enumerate(self.options):
            for item in opt:
                m[j, item.index] = 1.0
        return m

    def relabeled(self, mapping: Dict[Item, Item]) -> "DecisionStructure":
        """Same structure with items renamed; unmapped items keep their name"""
        return DecisionStructure(
            options=tuple(tuple(mapping.get(i, i) for i in opt) for opt in self.options),
            chosen=self.chosen,
            id=self.id,
        )

    def canonical(self) -> "DecisionStructure":
        """Representative with the same choice likelihood, used as the scoring key

        Items in every option add the same utility to each option and cancel
        in the choice rule, so they are dropped unless that would empty an
        option. Non-target items are then renamed and the unchosen options
        sorted to give the smallest form; the chosen option comes first. The
        result has no id.
        """
        common = set(self.options[0]).intersection(*self.options[1:])
        options = self.options
        if common and all(len(opt) > len(common) for opt in options):
            options = tuple(tuple(i for i in opt if i not in common) for opt in options)

        best = None
        for perm in permutations(NON_TARGET_ITEMS):
            mapping = dict(zip(NON_TARGET_ITEMS, perm))
            renamed = [tuple(sorted(mapping.get(i, i).index for i in opt)) for opt in options]
            chosen = renamed.pop(self.chosen)
            key = (chosen, *sorted(renamed))
            if best is None or key < best:
                best = key
        return DecisionStructure(
            options=tuple(tuple(ITEM_ORDER[k] for k in opt) for opt in best),
            chosen=0,
        )

    def to_dict(self) -> Dict[str, Any]:
        return {"id": self.id, "notation": self.notation, "chosen": self.chosen}


@dataclass(frozen=True)
class PriorSpec:
    """Independent uniform item utilities: (0, 1] positive, [-1, 0) negative"""

    context: Context = Context.POSITIVE

    @property
    def low(self) -> float:
        return 0.0 if self.context is Context.POSITIVE else -1.0

    @property
    def high(self) -> float:
        return 1.0 if self.context is Context.POSITIVE else 0.0

    def sample(self, rng: np.random.Generator, n: int) -> np.ndarray:
        """n utility vectors, shape (n, 5)"""
        # 1 - U[0,1) lies in (0, 1]
        magnitude = 1.0 - rng.random((n, len(ITEM_ORDER)))
        return magnitude if self.context is Context.POSITIVE else -magnitude

    def grid_nodes(self, points: int) -> np.ndarray:
        """Midpoint nodes of an equal-width partition of the support"""
        return self.low + (np.arange(points) + 0.5) / points


@dataclass(frozen=True)
class PreferenceScore:
    decision_id: str
    kind: ScoreKind
    value: float
    standard_error: Optional[float] = None
    method: str = "grid"

    def to_dict(self) -> Dict[str, Any]:
        return {
            "decision_id": self.decision_id,
            "kind": self.kind.value,
            "value": self.value,
            "standard_error": self.standard_error,
            "method": self.method,
        }


def utility_vector(values: Dict[Item, float]) -> np.ndarray:
    """Utility vector in ITEM_ORDER from a per-item mapping; missing items are 0"""
    return np.array([float(values.get(item, 0.0)) for item in ITEM_ORDER])

