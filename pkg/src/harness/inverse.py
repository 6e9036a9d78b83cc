"""Inverse experiments: agents judging which observed decision shows the stronger preference"""

import logging
from itertools import combinations
from pathlib import Path
from typing import List, Optional, Dict, Tuple

from ..ai.agents import Agent, Query, AgentResponse, ParseStatus, SyntheticKind, query_many, run_sync
from ..ai.parsing import InverseVerdict
from ..ai.prompts import Task, Style, PromptSpec, render_inverse
from ..core.config import ExperimentConfig, InverseSettings
from ..core.exceptions import ConfigError
from ..inverse.catalog import catalog_47
from ..inverse.models import DecisionStructure, Context, ScoreKind, PriorSpec
from ..inverse.scoring import score_catalog
from ..metrics.ranking import PairwiseOutcome, Ranking, Verdict, aggregate_pairwise, mean_ranking
from .common import derive_seed, create_agent_from_settings, open_run
from .records import RunRecord, RECORD_NAME, check_failure_rate

logger = logging.getLogger(__name__)


def catalog_pairs(decisions: List[DecisionStructure]) -> List[Tuple[DecisionStructure, DecisionStructure]]:
    """All unordered pairs in catalog order (1081 for the 47 decisions)"""
    return list(combinations(decisions, 2))


def oracle_scores(settings: InverseSettings, decisions: Optional[List[DecisionStructure]] = None) -> Dict[str, float]:
    """Rational-model scores the oracle agent answers from"""
    prior = PriorSpec(Context(settings.context))
    scores = score_catalog(
        prior,
        ScoreKind(settings.score_kind),
        method=settings.score_method,
        decisions=decisions,
        grid_points_per_dim=settings.grid_points,
        n_samples=settings.mc_samples,
        seed=settings.seed,
        beta=settings.beta,
    )
    return {s.decision_id: s.value for s in scores}


def build_inverse_queries(
    pairs: List[Tuple[DecisionStructure, DecisionStructure]],
    context: Context,
    style: Style,
    seed: int,
    sample_index: int,
) -> List[Query]:
    queries = []
    for k, pair in enumerate(pairs):
        query_seed = derive_seed(seed, sample_index, k)
        prompt = render_inverse(pair, PromptSpec(Task.INVERSE_PAIRWISE, style=style, context=context, seed=query_seed))
        queries.append(
            Query(
                key=f"{pair[0].id}:{pair[1].id}",
                task=Task.INVERSE_PAIRWISE,
                style=style,
                text=prompt.text,
                seed=query_seed,
                swapped=prompt.swapped,
                pair=prompt.displayed,
            )
        )
    return queries


def to_outcome(query: Query, response: AgentResponse) -> Optional[PairwiseOutcome]:
    """Map a displayed-order verdict back onto the original pair"""
    if response.status is ParseStatus.FAILED or response.verdict is None:
        return None
    shown_first, shown_second = query.pair
    if response.verdict is InverseVerdict.TIE:
        return PairwiseOutcome(shown_first.id, shown_second.id, Verdict.TIE)
    winner = shown_first if response.verdict is InverseVerdict.FIRST else shown_second
    loser = shown_second if winner is shown_first else shown_first
    return PairwiseOutcome(winner.id, loser.id, Verdict.FIRST_STRONGER)


def run_inverse(
    config: ExperimentConfig,
    agent: Optional[Agent] = None,
    decisions: Optional[List[DecisionStructure]] = None,
) -> RunRecord:
    """Judge every catalog pair once per sample and average the per-sample rankings

    Each sample is aggregated to win scores (ties count half); the final
    ranking re-ranks the mean win score across samples.

    Raises:
        ExperimentError: More than 10% failed completions
    """
    settings = config.inverse
    try:
        context = Context(settings.context)
        style = Style(settings.style)
    except ValueError as e:
        raise ConfigError("Invalid inverse context or style", str(e))

    decisions = decisions or catalog_47()
    if agent is None:
        scores = None
        if config.agent.provider == "synthetic" and config.agent.synthetic_kind == SyntheticKind.ORACLE.value:
            scores = oracle_scores(settings, decisions)
        agent = create_agent_from_settings(config.agent, seed=settings.seed, oracle_scores=scores)
    if not agent.supports(Task.INVERSE_PAIRWISE):
        raise ConfigError(f"Agent {agent.name} cannot answer the inverse task")

    pairs = catalog_pairs(decisions)
    ids = [d.id for d in decisions]
    per_sample = []

    with open_run(config, agent) as (record, sink):
        logger.info(
            f"Inverse run {record.run_id}: {context.value}, {style.value}, "
            f"{config.samples} samples x {len(pairs)} pairs, agent={agent.name}"
        )

        async def _run():
            try:
                for sample_index in range(config.samples):
                    queries = build_inverse_queries(pairs, context, style, settings.seed, sample_index)
                    results = await query_many(
                        agent, queries, lambda q: 1, on_result=lambda q, r, s=sample_index: sink.add(q, r, s)
                    )
                    outcomes = [to_outcome(q, r) for q, rs in zip(queries, results) for r in rs]
                    judged = [o for o in outcomes if o is not None]
                    per_sample.append(aggregate_pairwise(judged, ids).scores.tolist())
                    logger.debug(f"Sample {sample_index}: {len(judged)}/{len(outcomes)} judged")
            finally:
                await agent.close()

        run_sync(_run())
        sink.flush()
        record.issued, record.failed = sink.issued, sink.failed
        check_failure_rate(record, config.out_dir)

        final = mean_ranking([Ranking(list(ids), s) for s in per_sample])
        record.item_ids = ids
        record.derived = {
            "context": context.value,
            "style": style.value,
            "pairs_per_sample": len(pairs),
            "per_sample_win_scores": per_sample,
            "win_scores": final.scores.tolist(),
            "ranks": final.ranks.tolist(),
            "transcripts": str(sink.transcript_path),
        }
        record.status = "completed"

    record.save(Path(config.out_dir) / RECORD_NAME)
    logger.info(f"Inverse run finished: {record.parsed}/{record.issued} parsed")
    return record
