"""The 47 observed decisions and their CSV record format"""

import csv
import logging
from pathlib import Path
from typing import List

from ..core.exceptions import ValidationError, IngestionError
from .models import DecisionStructure, MAX_OPTIONS

logger = logging.getLogger(__name__)

# Chosen option first; letters within an option as listed in the source table
CATALOG_NOTATIONS = (
    "dcbax", "cbax", "bax", "ax", "x",
    "cbax|dbax", "ax|bx|cx|dx", "bax|cax", "bax|bcx|bdx", "bax|dcx",
    "ax|bx", "bax|cax|bdx", "ax|bx|cx", "cbax|d", "bax|c",
    "ax|b", "bax|c|d", "bax|dc", "ax|b|c", "ax|bx|dc",
    "bax|bdc", "ax|bx|cx|ad", "ax|b|c|d", "bax|bcx|bad", "ax|bx|ac",
    "ax|cb", "cbax|cbad", "ax|b|dc", "ax|bx|ac|ad", "ax|ab",
    "bax|bac", "ax|ab|dc", "ax|dcb", "x|a", "bax|bac|bad",
    "ax|ab|ac", "ax|ab|ac|ad", "x|a|b", "x|a|b|c", "x|a|cb",
    "x|a|b|c|d", "x|ba", "x|cba", "x|ba|dc", "x|a|b|dc",
    "x|a|dcb", "x|dcba",
)

CATALOG_SIZE = 47

# The single-option choice of X alone carries no evidence beyond the prior
NAIVE_DECISION = "x"

CSV_FIELDS = ["decision_id", "chosen"] + [f"option_{k}" for k in range(1, MAX_OPTIONS + 1)]


def decision_id(index: int) -> str:
    return f"D{index + 1:02d}"


def catalog_47() -> List[DecisionStructure]:
    """All 47 decisions in catalog order, ids D01..D47

    Structures are context independent; items are given concrete names only
    when a prompt is rendered.
    """
    decisions = [
        DecisionStructure.from_notation(n, id=decision_id(i)) for i, n in enumerate(CATALOG_NOTATIONS)
    ]
    for d in decisions:
        if not d.target_chosen:
            raise ValidationError("Catalog decision does not choose the target item", d.notation)
    return decisions


def find_decision(decisions: List[DecisionStructure], notation: str) -> DecisionStructure:
    for d in decisions:
        if d.notation == notation:
            return d
    raise ValidationError("No decision with this notation", notation)


def export_catalog(decisions: List[DecisionStructure], path: Path) -> Path:
    """One CSV row per decision: id, chosen index, item-letter strings per option"""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.DictWriter(f, fieldnames=CSV_FIELDS)
        writer.writeheader()
        for d in decisions:
            row = {"decision_id": d.id, "chosen": d.chosen}
            for k, opt in enumerate(d.options, start=1):
                row[f"option_{k}"] = "".join(i.value for i in opt)
            writer.writerow(row)
    logger.info(f"Exported {len(decisions)} decisions to {path}")
    return path


def import_catalog(path: Path) -> List[DecisionStructure]:
    """Read decisions written by export_catalog (or by hand in the same layout)"""
    path = Path(path)
    if not path.exists():
        raise IngestionError("Catalog file not found", str(path))

    decisions = []
    with open(path, newline="", encoding="utf-8") as f:
        reader = csv.DictReader(f)
        missing = {"decision_id", "chosen", "option_1"} - set(reader.fieldnames or [])
        if missing:
            raise IngestionError("Catalog file is missing columns", ", ".join(sorted(missing)))
        for row_number, row in enumerate(reader, start=1):
            options = [
                (row.get(f"option_{k}") or "").strip()
                for k in range(1, MAX_OPTIONS + 1)
            ]
            options = [o for o in options if o]
            try:
                decisions.append(
                    DecisionStructure.from_notation(
                        "|".join(options), id=row["decision_id"].strip(), chosen=int(row["chosen"])
                    )
                )
            except (ValueError, ValidationError) as e:
                raise IngestionError("Invalid catalog row", str(e), row=row_number)
    return decisions
