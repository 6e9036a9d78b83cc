"""Forward experiments: agents predicting (or making) risky choices"""

import logging
from pathlib import Path
from typing import List, Optional, Sequence, Dict, Any

import numpy as np

from ..ai.agents import Agent, Query, AgentResponse, ParseStatus, query_many, run_sync
from ..ai.prompts import Task, Style, PromptSpec, render_forward
from ..choice.baseline import max_ev_vector
from ..choice.models import ChoiceDataset
from ..core.config import ExperimentConfig
from ..core.exceptions import ConfigError, MetricError
from ..metrics.stats import spearman
from .common import derive_seed, create_agent_from_settings, load_dataset, open_run
from .records import RunRecord, RECORD_NAME, check_failure_rate

logger = logging.getLogger(__name__)


def build_forward_queries(dataset: ChoiceDataset, task: Task, style: Style, persona: Optional[str], seed: int) -> List[Query]:
    queries = []
    for index, (problem, observation) in enumerate(dataset):
        query_seed = derive_seed(seed, index)
        spec = PromptSpec(task=task, style=style, persona=persona, seed=query_seed)
        prompt = render_forward(problem, spec, n_people=observation.n_participants)
        queries.append(
            Query(
                key=problem.id,
                task=task,
                style=style,
                text=prompt.text,
                seed=query_seed,
                swapped=prompt.swapped,
                problem=prompt.displayed,
            )
        )
    return queries


def aggregate_forward(task: Task, query: Query, responses: List[AgentResponse]) -> float:
    """P(original A) from one query's parsed completions; NaN when none parsed"""
    parsed = [r.verdict for r in responses if r.status is not ParseStatus.FAILED]
    if not parsed:
        return float("nan")
    if task is Task.PREDICT_PROPORTION:
        p_displayed = float(np.mean(parsed))
    else:
        p_displayed = sum(1 for v in parsed if v == "A") / len(parsed)
    return 1.0 - p_displayed if query.swapped else p_displayed


def run_forward(
    config: ExperimentConfig,
    agent: Optional[Agent] = None,
    dataset: Optional[ChoiceDataset] = None,
) -> RunRecord:
    """Run one forward task over the filtered dataset

    Tasks 1 and 3 issue one completion per recorded participant and turn the
    answers into a choice rate; task 2 reads a proportion from a single
    completion.

    Raises:
        ExperimentError: Missing dataset, or more than 10% failed completions
    """
    try:
        task = Task(config.forward.task)
        style = Style(config.forward.style)
    except ValueError as e:
        raise ConfigError("Invalid forward task or style", str(e))
    if not task.is_forward:
        raise ConfigError("Forward runs need a forward task", task.value)

    dataset = dataset if dataset is not None else load_dataset(config.forward.dataset_path, config.forward.limit)
    agent = agent or create_agent_from_settings(config.agent, seed=config.forward.seed)
    queries = build_forward_queries(dataset, task, style, config.forward.persona, config.forward.seed)
    observations = {p.id: o for p, o in dataset}

    def completions(query: Query) -> int:
        if task is Task.PREDICT_PROPORTION:
            return 1
        return observations[query.key].n_participants

    with open_run(config, agent) as (record, sink):
        logger.info(f"Forward run {record.run_id}: {task.value}, {style.value}, {len(queries)} problems, agent={agent.name}")

        async def _run():
            try:
                return await query_many(agent, queries, completions, on_result=lambda q, r: sink.add(q, r))
            finally:
                await agent.close()

        results = run_sync(_run())
        sink.flush()
        record.issued, record.failed = sink.issued, sink.failed
        check_failure_rate(record, config.out_dir)

        prop_a = [aggregate_forward(task, q, r) for q, r in zip(queries, results)]
        record.item_ids = [p.id for p in dataset.problems]
        record.derived = {
            "task": task.value,
            "style": style.value,
            "prop_a": prop_a,
            "human": dataset.human_proportions().tolist(),
            "max_ev": max_ev_vector(dataset.problems).tolist(),
            "n_participants": [o.n_participants for o in dataset.observations],
            "transcripts": str(sink.transcript_path),
        }
        record.status = "completed"

    record.save(Path(config.out_dir) / RECORD_NAME)
    logger.info(f"Forward run finished: {record.parsed}/{record.issued} parsed")
    return record


def _valid_spearman(x: Sequence[float], y: Sequence[float]) -> Optional[float]:
    a, b = np.asarray(x, dtype=float), np.asarray(y, dtype=float)
    keep = np.isfinite(a) & np.isfinite(b)
    try:
        return spearman(a[keep], b[keep])
    except MetricError as e:
        logger.warning(f"Correlation undefined: {e}")
        return None


def run_temperature_sweep(
    config: ExperimentConfig,
    temperatures: Optional[Sequence[float]] = None,
    dataset: Optional[ChoiceDataset] = None,
) -> List[Dict[str, Any]]:
    """Repeat the forward run once per temperature, each in its own subdirectory

    Returns:
        One row per temperature: Spearman vs humans and vs max-EV
    """
    temperatures = list(temperatures if temperatures is not None else config.temperatures)
    dataset = dataset if dataset is not None else load_dataset(config.forward.dataset_path, config.forward.limit)
    rows = []
    for t in temperatures:
        sub = config.model_copy(
            deep=True,
            update={"out_dir": str(Path(config.out_dir) / f"temperature-{t:g}")},
        )
        sub.agent.temperature = t
        record = run_forward(sub, dataset=dataset)
        rows.append(
            {
                "temperature": t,
                "agent": record.agent,
                "spearman_humans": _valid_spearman(record.derived["prop_a"], record.derived["human"]),
                "spearman_max_ev": _valid_spearman(record.derived["prop_a"], record.derived["max_ev"]),
                "record": str(Path(sub.out_dir) / RECORD_NAME),
            }
        )
    return rows
