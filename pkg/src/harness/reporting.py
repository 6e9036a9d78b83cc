"""Report tables: forward comparisons, inverse ranking correlations and model fits

Tables are pandas DataFrames (rows = statistic, columns = agent), written as
CSV and rendered to the console with rich.
"""

import logging
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Mapping

import numpy as np
import pandas as pd
from rich.console import Console
from rich.table import Table

from ..behavioral.fitting import ComparisonRow
from ..choice.baseline import max_ev_vector
from ..choice.models import ChoiceDataset
from ..core.exceptions import MetricError
from ..inverse.models import ScoreKind, Context
from ..metrics.stats import SIGNIFICANCE_FOOTNOTE, compare, correlation_matrix, spearman
from .records import RunRecord

logger = logging.getLogger(__name__)

STATISTIC_ROWS = ["Spearman correlation", "Pearson correlation", "MSE"]
HUMANS_COLUMN = "Humans"


def record_label(record: RunRecord) -> str:
    """Column name for a run: agent plus prompt variant"""
    derived = record.derived
    if "task" in derived:
        return f"{record.agent} {derived['task']} {derived['style']}"
    if "context" in derived:
        return f"{record.agent} {derived['style']}"
    return record.agent


def _aligned(records: Mapping[str, RunRecord]) -> List[str]:
    """Shared item ids of several records

    Raises:
        MetricError: Records cover different items, or in a different order
    """
    if not records:
        raise MetricError("No run records to report")
    ids = None
    for name, record in records.items():
        if ids is None:
            ids = record.item_ids
        elif record.item_ids != ids:
            raise MetricError("Run records are not aligned", f"{name} covers different items")
    return list(ids)


def _statistics(x: Sequence[float], y: Sequence[float]) -> List[float]:
    a, b = np.asarray(x, dtype=float), np.asarray(y, dtype=float)
    if a.shape != b.shape:
        raise MetricError("Vectors are not aligned", f"{a.shape} vs {b.shape}")
    keep = np.isfinite(a) & np.isfinite(b)
    if keep.sum() < len(a):
        logger.info(f"Comparing {keep.sum()} of {len(a)} items with finite values")
    try:
        report = compare(a[keep], b[keep])
    except MetricError as e:
        logger.warning(f"Correlation undefined: {e}")
        return [float("nan"), float("nan"), float(np.mean((a[keep] - b[keep]) ** 2)) if keep.any() else float("nan")]
    return [report.spearman, report.pearson, report.mse]


def forward_table(records: Mapping[str, RunRecord], against: str = "humans") -> pd.DataFrame:
    """Spearman / Pearson / MSE of each agent's P(A) against humans or the max-EV baseline

    Args:
        records: Column name -> forward run record
        against: "humans", or "max-ev" (adds a Humans column)
    """
    if against not in ("humans", "max-ev"):
        raise MetricError("Unknown comparison target", against)
    _aligned(records)
    key = "human" if against == "humans" else "max_ev"

    columns = {}
    first = next(iter(records.values()))
    if against == "max-ev":
        columns[HUMANS_COLUMN] = _statistics(first.derived["human"], first.derived["max_ev"])
    for name, record in records.items():
        columns[name] = _statistics(record.derived["prop_a"], record.derived[key])
    return pd.DataFrame(columns, index=STATISTIC_ROWS)


def human_anchor(dataset: ChoiceDataset) -> float:
    """Spearman between human choice proportions and the max-EV baseline"""
    return spearman(dataset.human_proportions(), max_ev_vector(dataset.problems))


def forward_heatmap(records: Mapping[str, RunRecord], include_humans: bool = True, method: str = "spearman") -> pd.DataFrame:
    """Cross-agent correlation matrix of P(A) vectors

    Items where any agent has no parsed answer are left out.
    """
    _aligned(records)
    vectors = {name: np.asarray(r.derived["prop_a"], dtype=float) for name, r in records.items()}
    if include_humans:
        vectors = {HUMANS_COLUMN: np.asarray(next(iter(records.values())).derived["human"], dtype=float), **vectors}
    keep = np.logical_and.reduce([np.isfinite(v) for v in vectors.values()])
    return correlation_matrix({k: v[keep] for k, v in vectors.items()}, method=method)


def inverse_table(
    records: Mapping[str, RunRecord],
    rational_scores: Mapping[str, Mapping[ScoreKind, Mapping[str, float]]],
    human_ranks: Optional[Mapping[str, Mapping[str, float]]] = None,
) -> pd.DataFrame:
    """Spearman between agent rankings, human rankings and rational-model rankings

    Rows are (context, prompt, compared with), columns are agents plus a
    Humans column when human ranks are supplied for a context.

    Args:
        records: Column name -> inverse run record
        rational_scores: context -> score kind -> decision id -> score
        human_ranks: context -> decision id -> mean human rank (1 = strongest)
    """
    human_ranks = human_ranks or {}
    cells: Dict[tuple, Dict[str, float]] = {}

    def put(row: tuple, column: str, value: float) -> None:
        cells.setdefault(row, {})[column] = value

    for record in records.values():
        context = record.derived["context"]
        prompt = record.derived["style"]
        ids = record.item_ids
        wins = record.derived["win_scores"]
        agent = record.agent

        humans = human_ranks.get(context)
        if humans is not None:
            put((context, prompt, "humans"), agent, _ranking_spearman(ids, wins, {k: -v for k, v in humans.items()}))
        for kind, scores in rational_scores.get(context, {}).items():
            put((context, prompt, ScoreKind(kind).value), agent, _ranking_spearman(ids, wins, scores))

    for context, humans in human_ranks.items():
        negated = {k: -v for k, v in humans.items()}
        for kind, scores in rational_scores.get(context, {}).items():
            value = _ranking_spearman(list(negated), list(negated.values()), scores)
            for row in [r for r in cells if r[0] == context and r[2] == ScoreKind(kind).value]:
                put(row, HUMANS_COLUMN, value)

    if not cells:
        raise MetricError("Nothing to report for the inverse table")
    order = {c.value: i for i, c in enumerate(Context)}
    compared = {"humans": -1, **{k.value: i for i, k in enumerate(ScoreKind)}}
    rows = sorted(cells, key=lambda r: (order.get(r[0], 99), r[1], compared.get(r[2], 99)))
    frame = pd.DataFrame([cells[r] for r in rows], index=pd.MultiIndex.from_tuples(rows, names=["context", "prompt", "compared_with"]))
    if HUMANS_COLUMN in frame.columns:
        frame = frame[[c for c in frame.columns if c != HUMANS_COLUMN] + [HUMANS_COLUMN]]
    return frame


def _ranking_spearman(ids: Sequence[str], values: Sequence[float], reference: Mapping[str, float]) -> float:
    missing = [i for i in ids if i not in reference]
    if missing:
        raise MetricError("Rankings are not aligned", f"{len(missing)} decisions missing, e.g. {missing[0]}")
    try:
        return spearman(values, [reference[i] for i in ids])
    except MetricError as e:
        logger.warning(f"Ranking correlation undefined: {e}")
        return float("nan")


def rational_matrix(rational_scores: Mapping[ScoreKind, Mapping[str, float]]) -> pd.DataFrame:
    """Spearman matrix between the rational-model rankings of one context"""
    vectors = {}
    ids = None
    for kind, scores in rational_scores.items():
        ids = ids or list(scores)
        vectors[ScoreKind(kind).value] = [scores[i] for i in ids]
    return correlation_matrix(vectors)


def fit_table(rows: List[ComparisonRow]) -> pd.DataFrame:
    """Fitted-model table: one row per family, grouped as in report order"""
    data = []
    for row in rows:
        data.append(
            {
                "group": row.family.group.value,
                "model": row.family.label,
                "mse": row.mse,
                "params": ", ".join(f"{k}={v:.3g}" for k, v in row.result.params.items()) if row.result else "",
                "error": row.error or "",
            }
        )
    return pd.DataFrame(data).set_index("model")


def write_table(frame: pd.DataFrame, path: Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    frame.to_csv(path, float_format="%.4f")
    logger.info(f"Table written to {path}")
    return path


def render_table(frame: pd.DataFrame, title: str, footnote: Optional[str] = None, console: Optional[Console] = None) -> None:
    """Print a DataFrame as a rich table"""
    console = console or Console()
    table = Table(title=title, caption=footnote, show_lines=False)

    index_names = [n or "" for n in frame.index.names]
    for name in index_names:
        table.add_column(name, style="bold")
    for column in frame.columns:
        table.add_column(str(column), justify="right")

    for index, row in frame.iterrows():
        labels = list(index) if isinstance(index, tuple) else [index]
        table.add_row(*[str(v) for v in labels], *[_fmt(v) for v in row.tolist()])
    console.print(table)


def _fmt(value) -> str:
    if isinstance(value, (float, np.floating)):
        return "-" if np.isnan(value) else f"{value:.4f}"
    return "" if value is None else str(value)


def inverse_footnote() -> str:
    return SIGNIFICANCE_FOOTNOTE
