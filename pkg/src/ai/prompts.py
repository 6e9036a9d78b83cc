"""Prompt templates for the forward (gamble) and inverse (observed decision) tasks"""

import hashlib
import logging
from dataclasses import dataclass
from enum import Enum
from typing import Optional, Tuple, List, Dict

import numpy as np

from ..choice.models import Gamble, ChoiceProblem
from ..core.exceptions import ValidationError
from ..inverse.models import DecisionStructure, Context, Item, ITEM_ORDER

logger = logging.getLogger(__name__)


class Task(Enum):
    PREDICT_INDIVIDUAL = "predict-individual"
    PREDICT_PROPORTION = "predict-proportion"
    ACT_AS_PARTICIPANT = "act-as-participant"
    INVERSE_PAIRWISE = "inverse-pairwise"

    @property
    def is_forward(self) -> bool:
        return self is not Task.INVERSE_PAIRWISE


class Style(Enum):
    ZERO_SHOT = "zero-shot"
    CHAIN_OF_THOUGHT = "chain-of-thought"


# Forward task bodies; {persona} / {n_people} / {machine_a} / {machine_b} are filled in
PREDICT_INDIVIDUAL_TEMPLATE = """{persona} is presented with two gambling machines, and makes a choice between the machines with the goal of maximizing the amount of dollars received.

The person will get one reward from the machine they choose. A fixed proportion of 10% of this value will be paid to the participant as a performance bonus.
If the reward is negative, their bonus is set to $0.

Machine A: {machine_a}
Machine B: {machine_b}

Which machine does the person choose?
"""

PREDICT_PROPORTION_TEMPLATE = """{n_people} people are presented with two gambling machines, and each person makes a choice between the machines with the goal of maximizing the amount of dollars received.
Each person will get one reward from the machine they choose. A fixed proportion of 10% of this value will be paid to the participant as a performance bonus.
If the reward is negative, their bonus is set to $0.

Machine A: {machine_a}
Machine B: {machine_b}

How many people choose Machine A?
How many people choose Machine B?

"""

ACT_AS_PARTICIPANT_TEMPLATE = """There are two gambling machines, A and B. You need to make a choice between the machines with the goal of maximizing the amount of dollars received.
You will get one reward from the machine that you choose. A fixed proportion of 10% of this value will be paid to you as a performance bonus.
If the reward is negative, your bonus is set to $0.

Machine A: {machine_a}
Machine B: {machine_b}

Which machine do you choose?
"""

ANSWER_LETTER_TAIL = "Do not provide any explanation, only answer with A or B:"
ANSWER_LETTER_COT_TAIL = "Let's think step by step before answering with A or B:"
PROPORTION_TAIL = "Please only provide the percentage of people who choose Machine A and Machine B in the json format."
PROPORTION_COT_TAIL = (
    "Let's think step by step before providing the final output.\n"
    "Please provide the percentage of people who choose Machine A and Machine B in the json format."
)

# Inverse task framing per context
INVERSE_FRAMING = {
    Context.POSITIVE: {
        "intro": "The following are two choices that people have made between different bags of candy. Each candy is a different color.",
        "group": "Bag",
        "groups": "bags",
        "question": "Which choice (1 or 2) more strongly suggests that the person making the choice likes {target} candies?",
        "example": "For example, when there is only one bag, the person has no choice but to choose it.",
    },
    Context.NEGATIVE: {
        "intro": "The following are two choices that people have made between different sets of electric shocks. Each shock is identified by a different number.",
        "group": "Set",
        "groups": "sets",
        "question": "Which choice (1 or 2) more strongly suggests that the person making the choice minds shock {target} the least?",
        "example": "For example, when there is only one set, the person has no choice but to choose it.",
    },
}

INVERSE_ANSWER_TAIL = 'Please respond with either "Choice 1" or "Choice 2". Do not include anything else in your answer.'
INVERSE_COT_TAIL = "Let's think step by step."

REPROMPT_TEXT = 'Classify your previous answer. Reply with exactly one of: "Choice 1", "Choice 2", or "Tie".'

CANDY_COLORS = ("red", "brown", "yellow", "blue", "black", "green", "orange", "purple")
SHOCK_NUMBERS = ("1", "2", "3", "4", "5")


@dataclass(frozen=True)
class PromptSpec:
    """How to render one query; the seed drives every shuffle"""
    task: Task
    style: Style = Style.ZERO_SHOT
    persona: Optional[str] = None
    context: Optional[Context] = None
    seed: int = 0

    def __post_init__(self):
        if (self.task is Task.INVERSE_PAIRWISE) != (self.context is not None):
            raise ValidationError("A context is required for the inverse task and only there", self.task.value)


@dataclass(frozen=True)
class ForwardPrompt:
    """Rendered forward prompt; ``swapped`` means displayed Machine A is the problem's gamble B"""
    text: str
    problem: ChoiceProblem
    swapped: bool

    @property
    def displayed(self) -> ChoiceProblem:
        return self.problem.swapped() if self.swapped else self.problem


@dataclass(frozen=True)
class InversePrompt:
    """Rendered inverse prompt; ``swapped`` means "Choice 1" is the second decision of the pair"""
    text: str
    pair: Tuple[DecisionStructure, DecisionStructure]
    swapped: bool
    labels: Tuple[Tuple[Item, str], ...]

    @property
    def displayed(self) -> Tuple[DecisionStructure, DecisionStructure]:
        return (self.pair[1], self.pair[0]) if self.swapped else self.pair


def prompt_hash(text: str) -> str:
    return hashlib.sha256(text.encode("utf-8")).hexdigest()[:16]


def _money(x: float) -> str:
    return f"-${abs(x):,.2f}" if x < 0 else f"${x:,.2f}"


def describe_gamble(g: Gamble) -> str:
    """Machine description, e.g. "$10.00 with 50.0% chance, $0.00 with 50.0% chance" """
    if g.n_outcomes == 1:
        return f"{_money(g.payoffs[0])} with 100.0% chance"
    return ", ".join(f"{_money(x)} with {100 * q:.1f}% chance" for x, q in g.pairs())


def _persona_phrase(persona: Optional[str]) -> str:
    """Noun phrase replacing "A person", capitalised and given an article if missing"""
    if not persona or not persona.strip():
        return "A person"
    phrase = persona.strip()
    first = phrase.split()[0].lower()
    if first not in ("a", "an", "the"):
        article = "An" if phrase[0].lower() in "aeiou" else "A"
        phrase = f"{article} {phrase}"
    return phrase[0].upper() + phrase[1:]


def render_forward(p: ChoiceProblem, spec: PromptSpec, n_people: int = 100) -> ForwardPrompt:
    """Render a forward prompt, shuffling the machine order by the prompt seed

    Raises:
        ValidationError: The prompt names the inverse task
    """
    if not spec.task.is_forward:
        raise ValidationError("Forward rendering needs a forward task", spec.task.value)

    rng = np.random.default_rng(spec.seed)
    swapped = bool(rng.integers(2))
    shown = p.swapped() if swapped else p
    cot = spec.style is Style.CHAIN_OF_THOUGHT
    fields = {
        "machine_a": describe_gamble(shown.gamble_a),
        "machine_b": describe_gamble(shown.gamble_b),
    }

    if spec.task is Task.PREDICT_INDIVIDUAL:
        body = PREDICT_INDIVIDUAL_TEMPLATE.format(persona=_persona_phrase(spec.persona), **fields)
        tail = ANSWER_LETTER_COT_TAIL if cot else ANSWER_LETTER_TAIL
    elif spec.task is Task.PREDICT_PROPORTION:
        body = PREDICT_PROPORTION_TEMPLATE.format(n_people=n_people, **fields)
        tail = PROPORTION_COT_TAIL if cot else PROPORTION_TAIL
    else:
        body = ACT_AS_PARTICIPANT_TEMPLATE.format(**fields)
        tail = ANSWER_LETTER_COT_TAIL if cot else ANSWER_LETTER_TAIL

    text = body + tail
    logger.debug(f"Forward prompt {p.id}: seed={spec.seed}, swapped={swapped}, hash={prompt_hash(text)}")
    return ForwardPrompt(text=text, problem=p, swapped=swapped)


def render_forward_prompt(p: ChoiceProblem, spec: PromptSpec, n_people: int = 100) -> str:
    return render_forward(p, spec, n_people).text


def _describe_decision(
    index: int,
    d: DecisionStructure,
    names: Dict[Item, str],
    group: str,
    rng: np.random.Generator,
) -> List[str]:
    option_order = rng.permutation(len(d.options))
    lines = [f"Choice {index} was made between the following {group.lower()}s:"]
    chosen_label = 0
    for position, j in enumerate(option_order, start=1):
        items = list(d.options[j])
        shown = [names[items[k]] for k in rng.permutation(len(items))]
        lines.append(f"{group} {position}: {', '.join(shown)}.")
        if j == d.chosen:
            chosen_label = position
    lines.append("")
    lines.append(f"The person making the choice chose {group} {chosen_label}.")
    return lines


def render_inverse(pair: Tuple[DecisionStructure, DecisionStructure], spec: PromptSpec) -> InversePrompt:
    """Render a pairwise inverse prompt

    The seed shuffles, in order: the item names, the pair order, then for
    each decision its option order and the item order within each option.

    Raises:
        ValidationError: Not an inverse spec
    """
    if spec.task is not Task.INVERSE_PAIRWISE or spec.context is None:
        raise ValidationError("Inverse rendering needs the inverse task and a context")

    rng = np.random.default_rng(spec.seed)
    framing = INVERSE_FRAMING[spec.context]
    palette = CANDY_COLORS if spec.context is Context.POSITIVE else SHOCK_NUMBERS
    picked = rng.choice(len(palette), size=len(ITEM_ORDER), replace=False)
    names = {item: palette[k] for item, k in zip(ITEM_ORDER, picked)}
    if spec.context is Context.NEGATIVE:
        names = {item: f"shock {n}" for item, n in names.items()}

    swapped = bool(rng.integers(2))
    shown = (pair[1], pair[0]) if swapped else pair

    lines = [framing["intro"]]
    lines += _describe_decision(1, shown[0], names, framing["group"], rng)
    lines.append("")
    lines += _describe_decision(2, shown[1], names, framing["group"], rng)
    lines.append("")
    lines.append(
        f"People were required to choose among the {framing['groups']} available, "
        f"and were not allowed to reject all the {framing['groups']}."
    )
    lines.append(framing["example"])
    target = names[Item.X]
    if spec.context is Context.NEGATIVE:
        target = target.split()[-1]
    lines.append(framing["question"].format(target=target))
    lines.append(INVERSE_COT_TAIL if spec.style is Style.CHAIN_OF_THOUGHT else INVERSE_ANSWER_TAIL)

    text = "\n".join(lines)
    logger.debug(
        f"Inverse prompt {pair[0].id} vs {pair[1].id}: seed={spec.seed}, swapped={swapped}, hash={prompt_hash(text)}"
    )
    return InversePrompt(text=text, pair=pair, swapped=swapped, labels=tuple(names.items()))


def render_inverse_prompt(pair: Tuple[DecisionStructure, DecisionStructure], spec: PromptSpec) -> str:
    return render_inverse(pair, spec).text
