"""Helpers shared by the experiment runners"""

import logging
from contextlib import contextmanager
from pathlib import Path
from typing import Optional, Dict, Iterator, Tuple

import numpy as np

from ..ai.agents import Agent, create_agent
from ..choice.dataset import load_choices13k, read_dataset_jsonl, filter_experiment_subset
from ..choice.models import ChoiceDataset
from ..core.config import AgentSettings, ExperimentConfig
from ..core.database import DatabaseManager
from ..core.exceptions import ExperimentError
from .records import RunLock, RunRecord, RawSink, DATABASE_NAME, utc_now_iso

logger = logging.getLogger(__name__)


def derive_seed(*parts: int) -> int:
    """32-bit seed determined only by its parts"""
    return int(np.random.SeedSequence([int(p) for p in parts]).generate_state(1)[0])


def create_agent_from_settings(agent: AgentSettings, seed: int = 0, oracle_scores: Optional[Dict[str, float]] = None) -> Agent:
    return create_agent(
        agent.provider,
        model=agent.model,
        base_url=agent.base_url,
        temperature=agent.temperature,
        completions=agent.completions,
        timeout=agent.timeout,
        retries=agent.retries,
        max_in_flight=agent.max_in_flight,
        chat_path=agent.chat_path,
        auth_header=agent.auth_header,
        api_key_env=agent.api_key_env,
        kind=agent.synthetic_kind,
        seed=seed,
        beta=agent.beta,
        split=agent.split,
        oracle_scores=oracle_scores,
    )


def load_dataset(path: Optional[str], limit: Optional[int] = None) -> ChoiceDataset:
    """Load and filter the forward dataset (choices13k csv or canonical jsonl)

    Raises:
        ExperimentError: No path configured, or the file does not exist
    """
    if not path:
        raise ExperimentError("No dataset configured", "set forward.dataset_path or pass --dataset")
    source = Path(path)
    if not source.exists():
        raise ExperimentError("Dataset not found", str(source))

    if source.suffix == ".jsonl":
        dataset = read_dataset_jsonl(source)
    else:
        dataset = load_choices13k(source)
    dataset = filter_experiment_subset(dataset)
    if limit:
        dataset = dataset.head(limit)
    if len(dataset) == 0:
        raise ExperimentError("Dataset has no problems after filtering", str(source))
    logger.info(f"Loaded {len(dataset)} problems from {source}")
    return dataset


@contextmanager
def open_run(config: ExperimentConfig, agent: Agent) -> Iterator[Tuple[RunRecord, RawSink]]:
    """Lock the output directory, register the run and open its raw sink

    The sink is flushed and the lock released on exit; the caller fills in
    the record's derived fields.
    """
    out_dir = Path(config.out_dir)
    with RunLock(out_dir):
        db = DatabaseManager(str(out_dir / DATABASE_NAME))
        snapshot = config.snapshot()
        run_id = db.create_run(config.kind.value, agent.name, snapshot)
        record = RunRecord(kind=config.kind.value, agent=agent.name, config=snapshot, run_id=run_id)
        sink = RawSink(out_dir, db, run_id)
        status = "aborted"
        try:
            yield record, sink
            status = "completed"
        finally:
            sink.close()
            record.issued, record.failed = sink.issued, sink.failed
            db.finish_run(run_id, status if record.status != "aborted" else "aborted")
            db.close()
            record.finished_at = record.finished_at or utc_now_iso()
