"""Rule-based classifiers turning free-text answers into verdicts"""

import json
import logging
import re
from enum import Enum
from typing import Optional

logger = logging.getLogger(__name__)


class InverseVerdict(Enum):
    FIRST = "first"
    SECOND = "second"
    TIE = "tie"


_STRIP = " \t\n\r.:;,!*\"'`()[]"

_MACHINE = re.compile(r"\bmachine\s+([AB])\b", re.IGNORECASE)
_DECISION = re.compile(
    r"(?i:\b(?:choose|chooses|chose|choosing|pick|picks|select|selects|prefer|prefers|answer(?:\s+is)?|choice(?:\s+is)?)"
    r"\s*:?\s*(?:machine\s+)?)\**([AB])\b",
)
_LETTER = re.compile(r"\b([AB])\b")

_CHOICE = re.compile(r"\bchoice\s*([12])\b", re.IGNORECASE)
_TIE = re.compile(
    r"\b(tie|tied|equally|equal\s+(?:evidence|strength)|same\s+(?:strength|amount|evidence)|neither|no\s+difference)\b",
    re.IGNORECASE,
)
_SENTENCE = re.compile(r"(?<=[.!?])\s+")

_JSON_OBJECT = re.compile(r"\{[^{}]*\}", re.DOTALL)
_FRACTION = re.compile(r"(\d+(?:\.\d+)?)\s*%?\s*/\s*(\d+(?:\.\d+)?)\s*%?")
_PERCENT = re.compile(r"(\d+(?:\.\d+)?)\s*%")
_NUMBER = re.compile(r"-?\d+(?:\.\d+)?")
_KEY_SIDE = re.compile(r"(?:^|[^a-z])([ab])(?:$|[^a-z])")


def _last_line(text: str) -> str:
    lines = [line.strip() for line in text.strip().splitlines() if line.strip()]
    return lines[-1] if lines else ""


def _unique(values) -> Optional[str]:
    distinct = set(values)
    return distinct.pop() if len(distinct) == 1 else None


def parse_forward(text: str) -> Optional[str]:
    """Classify a forward answer as "A" or "B"; None when undecidable

    Cascade: bare letter, last explicit decision phrase, a single machine
    named throughout, a single capital letter on the final line.
    """
    if not text:
        return None
    bare = text.strip().strip(_STRIP)
    if bare.upper() in ("A", "B") and len(bare) == 1:
        return bare.upper()
    if bare.lower() in ("machine a", "machine b"):
        return bare[-1].upper()

    decisions = _DECISION.findall(text)
    if decisions:
        return decisions[-1].upper()

    machine = _unique(m.upper() for m in _MACHINE.findall(text))
    if machine:
        return machine

    return _unique(_LETTER.findall(_last_line(text)))


def _inverse_in(fragment: str) -> Optional[InverseVerdict]:
    number = _unique(_CHOICE.findall(fragment))
    has_tie = bool(_TIE.search(fragment))
    if number and not has_tie:
        return InverseVerdict.FIRST if number == "1" else InverseVerdict.SECOND
    if has_tie and not _CHOICE.search(fragment):
        return InverseVerdict.TIE
    return None


def parse_inverse(text: str) -> Optional[InverseVerdict]:
    """Classify a pairwise answer; None means the answer needs a re-prompt

    The final sentence decides when it is unambiguous, then the whole text.
    """
    if not text or not text.strip():
        return None
    bare = text.strip().strip(_STRIP).lower()
    if bare in ("choice 1", "1"):
        return InverseVerdict.FIRST
    if bare in ("choice 2", "2"):
        return InverseVerdict.SECOND
    if bare in ("tie", "equal", "equally"):
        return InverseVerdict.TIE

    sentences = [s for s in _SENTENCE.split(_last_line(text)) if s.strip()]
    if sentences:
        verdict = _inverse_in(sentences[-1])
        if verdict:
            return verdict
    return _inverse_in(text)


def parse_proportion(text: str) -> Optional[float]:
    """Read P(A) from a task-2 answer

    Accepts a JSON object with two percentages (keys naming A and B), an
    "x/y" split, or a single "x%" for machine A. Returns None otherwise.
    """
    if not text:
        return None

    for blob in reversed(_JSON_OBJECT.findall(text)):
        try:
            data = json.loads(blob)
        except json.JSONDecodeError:
            continue
        if not isinstance(data, dict):
            continue
        share_a = share_b = None
        for key, value in data.items():
            number = _NUMBER.search(str(value))
            if number is None:
                continue
            side = _KEY_SIDE.search(str(key).strip().lower())
            if side and side.group(1) == "a":
                share_a = float(number.group())
            elif side and side.group(1) == "b":
                share_b = float(number.group())
        if share_a is not None and share_b is not None and share_a >= 0 and share_b >= 0 and share_a + share_b > 0:
            return share_a / (share_a + share_b)

    fraction = _FRACTION.search(text)
    if fraction:
        a, b = float(fraction.group(1)), float(fraction.group(2))
        if a + b > 0:
            return a / (a + b)

    percent = _PERCENT.search(text)
    if percent:
        value = float(percent.group(1))
        if 0.0 <= value <= 100.0:
            return value / 100.0

    logger.debug(f"Could not parse a proportion from: {text[:80]!r}")
    return None
