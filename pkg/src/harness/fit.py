"""Behavioral model fitting against forward-run outputs or human proportions"""

import json
import logging
from pathlib import Path
from typing import List, Optional, Tuple

import numpy as np

from ..behavioral.families import ModelFamily
from ..behavioral.fitting import ComparisonRow, FitResult, model_comparison, write_fit_report, best_row
from ..choice.models import ChoiceDataset, ChoiceProblem
from ..core.config import ExperimentConfig
from ..core.exceptions import ExperimentError, ConfigError
from .common import load_dataset
from .records import RunLock, RunRecord

logger = logging.getLogger(__name__)

FIT_REPORT_NAME = "fits.jsonl"


def fit_targets(dataset: ChoiceDataset, record: Optional[RunRecord] = None) -> List[Tuple[ChoiceProblem, float]]:
    """Pair problems with the P(A) to fit

    With a forward record the agent's P(A) is used (problems with no parsed
    completion are dropped); otherwise the human proportions.

    Raises:
        ExperimentError: The record covers problems missing from the dataset
    """
    if record is None:
        return [(p, o.prop_a) for p, o in dataset]

    problems = {p.id: p for p in dataset.problems}
    missing = [i for i in record.item_ids if i not in problems]
    if missing:
        raise ExperimentError(
            "Forward record does not match the dataset",
            f"{len(missing)} problem ids missing, e.g. {missing[0]}",
        )
    prop_a = record.derived.get("prop_a")
    if prop_a is None:
        raise ExperimentError("Run record has no P(A) vector", record.kind)

    targets = [(problems[i], float(p)) for i, p in zip(record.item_ids, prop_a) if np.isfinite(p)]
    dropped = len(record.item_ids) - len(targets)
    if dropped:
        logger.warning(f"Dropped {dropped} problems without a parsed answer")
    return targets


def run_fit(
    config: ExperimentConfig,
    record_path: Optional[str] = None,
    dataset: Optional[ChoiceDataset] = None,
    families: Optional[List[ModelFamily]] = None,
) -> List[ComparisonRow]:
    """Fit the model families and write ``fits.jsonl`` to the output directory

    Raises:
        RunLockedError: Another experiment holds the output directory
    """
    dataset = dataset if dataset is not None else load_dataset(config.forward.dataset_path, config.forward.limit)
    record = RunRecord.load(Path(record_path)) if record_path else None
    if record is not None and record.kind not in ("forward-task-1", "forward-task-2", "forward-task-3", "ablation"):
        raise ConfigError("Fitting needs a forward run record", record.kind)

    targets = fit_targets(dataset, record)
    source = f"run {record.run_id} ({record.agent})" if record else "human proportions"
    logger.info(f"Fitting {len(families or list(ModelFamily))} families to {len(targets)} targets from {source}")

    fitting = config.fitting
    out_dir = Path(config.out_dir)
    with RunLock(out_dir):
        rows = model_comparison(
            targets,
            families=families,
            restarts=fitting.restarts,
            seed=fitting.seed,
            max_iter=fitting.max_iter,
            tolerance=fitting.tolerance,
            workers=fitting.workers,
        )
        write_fit_report(rows, out_dir / FIT_REPORT_NAME)
        with open(out_dir / "fit_source.json", "w", encoding="utf-8") as f:
            json.dump({"source": source, "targets": len(targets), "record": record_path}, f, indent=2)

    best = best_row(rows)
    if best is not None:
        logger.info(f"Best family: {best.family.value} (mse={best.mse:.5f})")
    return rows


def load_fit_report(path: Path) -> List[ComparisonRow]:
    """Read rows back from a ``fits.jsonl`` for rendering"""
    path = Path(path)
    if path.is_dir():
        path = path / FIT_REPORT_NAME
    if not path.exists():
        raise ExperimentError("Fit report not found", str(path))
    rows = []
    with open(path, "r", encoding="utf-8") as f:
        for line in f:
            if not line.strip():
                continue
            data = json.loads(line)
            family = ModelFamily(data["family"])
            if data.get("mse") is None:
                rows.append(ComparisonRow(family, error=data.get("error")))
            else:
                result = FitResult(
                    family=family,
                    params=data["params"],
                    mse=data["mse"],
                    restarts=data["restarts"],
                    converged=data["converged"],
                )
                rows.append(ComparisonRow(family, result=result))
    return rows
