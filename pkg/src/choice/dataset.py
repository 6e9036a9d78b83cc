"""choices13k ingestion, experiment filter and canonical serialization"""

import io
import json
import logging
import math
from pathlib import Path
from typing import List, Dict, Any, Optional, Tuple

import numpy as np
import pandas as pd
from scipy.stats import binom

from ..core.exceptions import IngestionError, ValidationError
from .models import (
    Gamble,
    ChoiceProblem,
    ChoiceObservation,
    ChoiceDataset,
    MIN_PARTICIPANTS,
    PROB_TOLERANCE,
)

logger = logging.getLogger(__name__)

# Rows whose probabilities are off by less than this are renormalised
RENORMALIZE_TOLERANCE = 1e-6

CHOICES13K_COLUMNS = [
    "Problem", "Feedback", "n",
    "Ha", "pHa", "La", "LotShapeA", "LotNumA",
    "Hb", "pHb", "Lb", "LotShapeB", "LotNumB",
    "Amb", "bRate",
]

CANONICAL_COLUMNS = ["id", "payoffs_a", "probs_a", "payoffs_b", "probs_b", "prop_a", "n"]

_TRUE_STRINGS = {"1", "true", "t", "yes", "y", "1.0"}

# Integer shape codes used by some releases
LOT_SHAPE_CODES = {0: "-", 1: "Symm", 2: "R-skew", 3: "L-skew"}


def _lot_shape_name(lot_shape: "str | int | float | None") -> str:
    if lot_shape is None:
        return "-"
    text = str(lot_shape).strip()
    try:
        code = float(text)
    except ValueError:
        return text
    if math.isnan(code):
        return "-"
    if code.is_integer() and int(code) in LOT_SHAPE_CODES:
        return LOT_SHAPE_CODES[int(code)]
    raise ValueError(f"unknown lottery shape code {lot_shape!r}")


def lottery_distribution(
    high: float,
    p_high: float,
    low: float,
    lot_shape: "str | int",
    lot_num: int,
) -> Tuple[List[float], List[float]]:
    """Expand the choices13k (high, pHigh, low, lottery) description into outcome lists

    The high outcome is replaced by a lottery of ``lot_num`` outcomes whose
    shape is one of "-" (no lottery), "Symm", "R-skew" or "L-skew", or the
    integer codes 0-3 in that order; the low outcome receives the remaining
    probability ``1 - p_high``.
    """
    shape = _lot_shape_name(lot_shape)
    if shape in ("-", "", "nan") or lot_num <= 1:
        values, probs = [high], [p_high]
    elif shape == "Symm":
        k = lot_num - 1
        values = [high - k / 2 + i for i in range(lot_num)]
        probs = [p_high * binom.pmf(i, k, 0.5) for i in range(lot_num)]
    elif shape in ("R-skew", "L-skew"):
        if shape == "R-skew":
            c, sign = -1 - lot_num, 1
        else:
            c, sign = 1 + lot_num, -1
        values = [high + c + sign * 2 ** (i + 1) for i in range(lot_num)]
        probs = [p_high / 2 ** (i + 1) for i in range(lot_num)]
        # the last branch takes the remaining mass of the geometric series
        probs[-1] *= 2
    else:
        raise ValueError(f"unknown lottery shape {lot_shape!r}")

    if p_high < 1.0:
        values = [low] + values
        probs = [1.0 - p_high] + probs

    # merge coincident outcomes so every payoff appears once
    merged: Dict[float, float] = {}
    for x, q in zip(values, probs):
        merged[float(x)] = merged.get(float(x), 0.0) + float(q)
    pairs = [(x, q) for x, q in merged.items() if q > 0.0]
    return [x for x, _ in pairs], [q for _, q in pairs]


def _normalized_gamble(payoffs: List[float], probs: List[float], row: int) -> Gamble:
    """Build a gamble, renormalising small rounding drift with a warning"""
    if len(payoffs) != len(probs):
        raise IngestionError(
            "Payoff and probability lists differ in length",
            f"{len(payoffs)} vs {len(probs)}",
            row=row,
        )
    total = math.fsum(probs)
    if PROB_TOLERANCE < abs(total - 1.0) <= RENORMALIZE_TOLERANCE:
        logger.warning(f"Row {row}: renormalising probabilities that sum to {total!r}")
        probs = [q / total for q in probs]
    try:
        return Gamble(tuple(payoffs), tuple(probs))
    except ValidationError as e:
        raise IngestionError("Invalid gamble", str(e), row=row)


def _as_flag(value: Any) -> bool:
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, float, np.integer, np.floating)):
        return bool(value) and not (isinstance(value, float) and math.isnan(value))
    return str(value).strip().lower() in _TRUE_STRINGS


def _parse_list(value: Any) -> List[float]:
    text = str(value).strip()
    if text.startswith("["):
        return [float(x) for x in json.loads(text)]
    return [float(x) for x in text.split(";") if x.strip()]


def _read_table(path: Path) -> pd.DataFrame:
    text = path.read_text(encoding="utf-8")
    if not text.strip():
        return pd.DataFrame()
    sep = "\t" if path.suffix.lower() in (".tsv", ".tab") else ","
    return pd.read_csv(io.StringIO(text), sep=sep, dtype=str, keep_default_na=False)


def load_choices13k(path: str | Path, min_participants: Optional[int] = None) -> ChoiceDataset:
    """
    Load a choices13k-style file into a dataset

    Accepts the published choices13k column layout or the canonical explicit
    layout (see CANONICAL_COLUMNS). One source row becomes one record.

    Args:
        path: delimiter-separated file (.csv, or .tsv for tabs)
        min_participants: participant floor; defaults to 15 for the
            choices13k layout and 1 for the canonical layout

    Returns:
        ChoiceDataset with one record per row

    Raises:
        IngestionError: missing columns or a malformed row
    """
    path = Path(path)
    if not path.exists():
        raise IngestionError("Dataset file not found", str(path))

    frame = _read_table(path)
    if frame.empty:
        logger.warning(f"Dataset file {path} is empty")
        return ChoiceDataset([])

    columns = set(frame.columns)
    if set(CANONICAL_COLUMNS) <= columns:
        floor = 1 if min_participants is None else min_participants
        records = [_canonical_row(row, i, floor) for i, row in enumerate(frame.to_dict("records"))]
    else:
        missing = [c for c in CHOICES13K_COLUMNS if c not in columns]
        if missing:
            raise IngestionError("Missing columns", ", ".join(missing))
        floor = MIN_PARTICIPANTS if min_participants is None else min_participants
        records = [_choices13k_row(row, i, floor) for i, row in enumerate(frame.to_dict("records"))]

    try:
        dataset = ChoiceDataset(records)
    except ValidationError as e:
        raise IngestionError("Dataset is inconsistent", str(e))
    logger.info(f"Loaded {len(dataset)} problems from {path}")
    return dataset


def _choices13k_row(row: Dict[str, Any], i: int, floor: int) -> Tuple[ChoiceProblem, ChoiceObservation]:
    try:
        payoffs_a, probs_a = lottery_distribution(
            float(row["Ha"]), float(row["pHa"]), float(row["La"]),
            str(row["LotShapeA"]), int(float(row["LotNumA"])),
        )
        payoffs_b, probs_b = lottery_distribution(
            float(row["Hb"]), float(row["pHb"]), float(row["Lb"]),
            str(row["LotShapeB"]), int(float(row["LotNumB"])),
        )
        n = int(float(row["n"]))
        b_rate = float(row["bRate"])
    except (ValueError, TypeError) as e:
        raise IngestionError("Malformed row", str(e), row=i)

    if n < floor:
        raise IngestionError("Too few participants", f"n={n} < {floor}", row=i)

    problem_id = f"{row['Problem']}-{i}"
    problem = ChoiceProblem(
        id=problem_id,
        gamble_a=_normalized_gamble(payoffs_a, probs_a, i),
        gamble_b=_normalized_gamble(payoffs_b, probs_b, i),
        ambiguous=_as_flag(row["Amb"]),
        feedback=_as_flag(row["Feedback"]),
    )
    try:
        observation = ChoiceObservation(problem_id, 1.0 - b_rate, n)
    except ValidationError as e:
        raise IngestionError("Invalid observation", str(e), row=i)
    return problem, observation


def _canonical_row(row: Dict[str, Any], i: int, floor: int) -> Tuple[ChoiceProblem, ChoiceObservation]:
    try:
        payoffs_a = _parse_list(row["payoffs_a"])
        probs_a = _parse_list(row["probs_a"])
        payoffs_b = _parse_list(row["payoffs_b"])
        probs_b = _parse_list(row["probs_b"])
        prop_a = float(row["prop_a"])
        n = int(float(row["n"]))
    except (ValueError, TypeError, json.JSONDecodeError) as e:
        raise IngestionError("Malformed row", str(e), row=i)

    if n < floor:
        raise IngestionError("Too few participants", f"n={n} < {floor}", row=i)

    problem = ChoiceProblem(
        id=str(row["id"]),
        gamble_a=_normalized_gamble(payoffs_a, probs_a, i),
        gamble_b=_normalized_gamble(payoffs_b, probs_b, i),
        ambiguous=_as_flag(row.get("ambiguous", False)),
        feedback=_as_flag(row.get("feedback", True)),
    )
    try:
        observation = ChoiceObservation(problem.id, prop_a, n)
    except ValidationError as e:
        raise IngestionError("Invalid observation", str(e), row=i)
    return problem, observation


def filter_experiment_subset(dataset: ChoiceDataset) -> ChoiceDataset:
    """Keep the problems that are not ambiguous and were played with feedback"""
    kept = [(p, o) for p, o in dataset if not p.ambiguous and p.feedback]
    logger.info(f"Experiment filter kept {len(kept)} of {len(dataset)} problems")
    return ChoiceDataset(kept)


def write_dataset_jsonl(dataset: ChoiceDataset, path: str | Path) -> Path:
    """Write the canonical line-delimited serialization"""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as f:
        for problem, observation in dataset:
            record = {
                "id": problem.id,
                "payoffs_a": list(problem.gamble_a.payoffs),
                "probs_a": list(problem.gamble_a.probs),
                "payoffs_b": list(problem.gamble_b.payoffs),
                "probs_b": list(problem.gamble_b.probs),
                "prop_a": observation.prop_a,
                "n": observation.n_participants,
                "ambiguous": problem.ambiguous,
                "feedback": problem.feedback,
            }
            f.write(json.dumps(record) + "\n")
    return path


def read_dataset_jsonl(path: str | Path) -> ChoiceDataset:
    """Read a file written by write_dataset_jsonl; missing flags default to an experiment problem"""
    records = []
    with open(path, "r", encoding="utf-8") as f:
        for i, line in enumerate(f):
            if not line.strip():
                continue
            data = json.loads(line)
            problem = ChoiceProblem(
                id=str(data["id"]),
                gamble_a=_normalized_gamble(data["payoffs_a"], data["probs_a"], i),
                gamble_b=_normalized_gamble(data["payoffs_b"], data["probs_b"], i),
                ambiguous=bool(data.get("ambiguous", False)),
                feedback=bool(data.get("feedback", True)),
            )
            records.append((problem, ChoiceObservation(problem.id, float(data["prop_a"]), int(data["n"]))))
    return ChoiceDataset(records)


def synthetic_choices13k(
    n_problems: int = 200,
    seed: int = 0,
    ambiguous_count: int = 20,
    no_feedback_count: int = 30,
) -> Tuple[ChoiceDataset, str]:
    """
    Deterministic stand-in for the official file

    Produces rows in the choices13k column layout with exactly
    ``ambiguous_count`` ambiguous rows and ``no_feedback_count``
    non-ambiguous rows without feedback, so the experiment filter keeps
    ``n_problems - ambiguous_count - no_feedback_count`` rows. Human
    proportions come from a noisy logistic on the EV difference.

    Returns:
        (dataset, csv_text)
    """
    if ambiguous_count + no_feedback_count > n_problems:
        raise ValueError("flag counts exceed the number of problems")

    rng = np.random.default_rng(seed)
    shapes = ["-", "-", "Symm", "R-skew", "L-skew"]
    flags = np.zeros(n_problems, dtype=int)
    order = rng.permutation(n_problems)
    flags[order[:ambiguous_count]] = 1
    flags[order[ambiguous_count:ambiguous_count + no_feedback_count]] = 2

    rows = []
    for i in range(n_problems):
        ha = float(rng.integers(-10, 31))
        pha = float(rng.choice([0.01, 0.05, 0.1, 0.2, 0.25, 0.4, 0.5, 0.6, 0.75, 0.8, 0.9, 0.95, 1.0]))
        la = float(rng.integers(-20, int(ha) + 1))
        hb = float(rng.integers(-10, 51))
        phb = float(rng.choice([0.01, 0.05, 0.1, 0.2, 0.25, 0.4, 0.5, 0.6, 0.75, 0.8, 0.9, 0.95, 1.0]))
        lb = float(rng.integers(-30, int(hb) + 1))
        shape_b = str(rng.choice(shapes))
        lot_num_b = 1 if shape_b == "-" else int(rng.integers(2, 8))
        if shape_b == "Symm" and lot_num_b % 2 == 0:
            lot_num_b += 1

        xa, qa = lottery_distribution(ha, pha, la, "-", 1)
        xb, qb = lottery_distribution(hb, phb, lb, shape_b, lot_num_b)
        ev_diff = float(np.dot(xa, qa) - np.dot(xb, qb))
        p_a = 1.0 / (1.0 + math.exp(-0.15 * ev_diff))
        p_a = float(np.clip(0.7 * p_a + 0.3 * rng.beta(2, 2), 0.0, 1.0))
        n = int(rng.integers(15, 34))

        rows.append({
            "Problem": i + 1,
            "Feedback": 0 if flags[i] == 2 else 1,
            "n": n,
            "Block": int(rng.integers(1, 6)),
            "Ha": ha, "pHa": pha, "La": la, "LotShapeA": "-", "LotNumA": 1,
            "Hb": hb, "pHb": phb, "Lb": lb, "LotShapeB": shape_b, "LotNumB": lot_num_b,
            "Amb": 1 if flags[i] == 1 else 0,
            "Corr": 0,
            "bRate": round(1.0 - p_a, 6),
        })

    frame = pd.DataFrame(rows)
    csv_text = frame.to_csv(index=False)
    records = [_choices13k_row(row, i, MIN_PARTICIPANTS) for i, row in enumerate(frame.to_dict("records"))]
    return ChoiceDataset(records), csv_text
