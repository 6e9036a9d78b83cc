"""Luce forward model, posterior inversion and the four preference-evidence scores

Two estimators share one set of definitions:

- ``score_grid`` sums over a tensor grid of midpoint nodes (5 dimensions),
  the brute-force reference.
- ``score_mc`` draws utilities from the prior and weights them by the
  likelihood of the observed choice (self-normalised importance sampling),
  with jackknife standard errors.
"""

import logging
import zlib
from concurrent.futures import ThreadPoolExecutor
from functools import lru_cache
from pathlib import Path
from typing import Dict, List, Sequence, Tuple

import numpy as np
import pandas as pd
from scipy.special import softmax

from ..core.exceptions import ScoringError, IngestionError
from ..metrics.ranking import Ranking
from .catalog import catalog_47
from .models import (
    DecisionStructure,
    PriorSpec,
    PreferenceScore,
    ScoreKind,
    Context,
    ITEM_ORDER,
)

logger = logging.getLogger(__name__)

MIN_GRID_POINTS = 3
MAX_GRID_POINTS = 30
MIN_MC_SAMPLES = 1000

# Grid points evaluated per vectorised chunk
GRID_CHUNK = 1 << 18

TARGET = 0  # column of X in utility vectors


def luce_probs(u: np.ndarray, d: DecisionStructure, beta: float = 1.0) -> np.ndarray:
    """Choice probability of every option; rows of u are utility vectors

    Option utilities are sums of member-item utilities.
    """
    if beta <= 0:
        raise ScoringError("Sensitivity beta must be positive", str(beta))
    option_utility = np.asarray(u, dtype=float) @ d.membership().T
    return softmax(beta * option_utility, axis=-1)


def luce_choice_prob(u: np.ndarray, d: DecisionStructure, beta: float = 1.0) -> "float | np.ndarray":
    """Probability of the observed choice given utilities u (one vector or a stack)"""
    p = luce_probs(u, d, beta)[..., d.chosen]
    return float(p) if np.ndim(p) == 0 else p


def _target_max_share(u: np.ndarray) -> np.ndarray:
    """1/m where X ties m-way for the maximum (1 when strictly maximal), else 0"""
    top = u.max(axis=1, keepdims=True)
    at_top = u == top
    return at_top[:, TARGET] / at_top.sum(axis=1)


def _strictly_maximal(u: np.ndarray) -> np.ndarray:
    others = np.delete(u, TARGET, axis=1).max(axis=1)
    return u[:, TARGET] > others


@lru_cache(maxsize=512)
def _grid_scores(d: DecisionStructure, prior: PriorSpec, points: int, beta: float) -> Dict[ScoreKind, float]:
    nodes = prior.grid_nodes(points)
    shape = (points,) * len(ITEM_ORDER)
    total = points ** len(ITEM_ORDER)

    weight = 0.0
    weighted_target = 0.0
    weighted_share = 0.0
    share_mass = 0.0
    for start in range(0, total, GRID_CHUNK):
        flat = np.arange(start, min(start + GRID_CHUNK, total))
        u = nodes[np.stack(np.unravel_index(flat, shape), axis=1)]
        lik = luce_choice_prob(u, d, beta)
        share = _target_max_share(u)
        weight += lik.sum()
        weighted_target += (lik * u[:, TARGET]).sum()
        weighted_share += (lik * share).sum()
        share_mass += share.sum()

    if weight <= 0.0:
        raise ScoringError("Zero total likelihood weight on the grid", d.notation)
    return {
        ScoreKind.ABSOLUTE: weighted_target / weight,
        ScoreKind.RELATIVE: weighted_share / weight,
        ScoreKind.LIKELIHOOD: weighted_share / share_mass,
        ScoreKind.MARGINAL: total / weight,
    }


def score_grid(
    d: DecisionStructure,
    prior: PriorSpec,
    kind: "ScoreKind | str",
    grid_points_per_dim: int = 21,
    beta: float = 1.0,
) -> PreferenceScore:
    """Preference evidence for X by Riemann summation over the prior grid

    Nodes are cell midpoints so every node lies inside the prior support.
    When X ties other items for the maximum at a node, the node credits the
    "X maximal" event with 1/m of its mass (m = size of the tie); on a
    continuous prior such ties have probability zero.

    Raises:
        ScoringError: Grid size outside [3, 30]
    """
    kind = ScoreKind(kind)
    if not MIN_GRID_POINTS <= grid_points_per_dim <= MAX_GRID_POINTS:
        raise ScoringError(
            f"Grid points per dimension must lie in [{MIN_GRID_POINTS}, {MAX_GRID_POINTS}]",
            str(grid_points_per_dim),
        )
    values = _grid_scores(d.canonical(), prior, int(grid_points_per_dim), float(beta))
    return PreferenceScore(d.id, kind, float(values[kind]), method="grid")


def decision_seed(d: DecisionStructure, prior: PriorSpec, seed: int) -> np.random.SeedSequence:
    """Seed sequence that depends only on (seed, canonical structure, context)

    Decisions with the same canonical form share a sample stream, so renaming
    items or reordering unchosen options leaves Monte Carlo scores unchanged.
    """
    key = zlib.crc32(f"{d.canonical().notation}:{prior.context.value}".encode("utf-8"))
    return np.random.SeedSequence([int(seed), key])


def _ratio_jackknife(num: np.ndarray, den: np.ndarray) -> Tuple[float, float]:
    """Ratio sum(num)/sum(den) and its leave-one-out jackknife standard error"""
    n = len(num)
    total_num = num.sum()
    total_den = den.sum()
    with np.errstate(divide="ignore", invalid="ignore"):
        loo = (total_num - num) / (total_den - den)
    loo = loo[np.isfinite(loo)]
    se = float(np.sqrt((n - 1) / n * np.sum((loo - loo.mean()) ** 2))) if len(loo) > 1 else float("nan")
    return float(total_num / total_den), se


def score_mc(
    d: DecisionStructure,
    prior: PriorSpec,
    kind: "ScoreKind | str",
    n_samples: int = 100_000,
    seed: int = 0,
    beta: float = 1.0,
) -> PreferenceScore:
    """Preference evidence for X by self-normalised importance sampling

    Deterministic given (seed, canonical decision, context). The "X maximal"
    event is strict here; ties have probability zero under the continuous prior.

    Raises:
        ScoringError: n_samples below the floor, or zero total weight
    """
    kind = ScoreKind(kind)
    if n_samples < MIN_MC_SAMPLES:
        raise ScoringError(f"At least {MIN_MC_SAMPLES} samples are required", str(n_samples))

    rng = np.random.default_rng(decision_seed(d, prior, seed))
    u = prior.sample(rng, n_samples)
    w = luce_choice_prob(u, d.canonical(), beta)
    if w.sum() <= 0.0:
        raise ScoringError("Zero total likelihood weight", d.id)
    maximal = _strictly_maximal(u).astype(float)

    if kind is ScoreKind.ABSOLUTE:
        value, se = _ratio_jackknife(w * u[:, TARGET], w)
    elif kind is ScoreKind.RELATIVE:
        value, se = _ratio_jackknife(w * maximal, w)
    elif kind is ScoreKind.LIKELIHOOD:
        if maximal.sum() == 0:
            raise ScoringError("No sample has X maximal", d.id)
        value, se = _ratio_jackknife(w * maximal, maximal)
    else:
        value, se = _ratio_jackknife(np.ones_like(w), w)
    return PreferenceScore(d.id, kind, value, standard_error=se, method="mc")


def score_catalog(
    prior: PriorSpec,
    kind: "ScoreKind | str",
    method: str = "grid",
    decisions: Sequence[DecisionStructure] = None,
    grid_points_per_dim: int = 21,
    n_samples: int = 100_000,
    seed: int = 0,
    beta: float = 1.0,
    workers: int = 1,
) -> List[PreferenceScore]:
    """Score every decision (the full catalog by default), in input order"""
    decisions = list(decisions) if decisions is not None else catalog_47()

    def score(d: DecisionStructure) -> PreferenceScore:
        if method == "grid":
            return score_grid(d, prior, kind, grid_points_per_dim, beta)
        if method == "mc":
            return score_mc(d, prior, kind, n_samples, seed, beta)
        raise ScoringError("Unknown scoring method", method)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            scores = list(pool.map(score, decisions))
    else:
        scores = [score(d) for d in decisions]
    logger.info(f"Scored {len(scores)} decisions: {ScoreKind(kind).value}, {prior.context.value}, {method}")
    return scores


def rank_decisions(scores: Sequence[PreferenceScore]) -> Ranking:
    """Rank decisions from strongest to weakest evidence for X, midranks on ties

    Raises:
        ScoringError: No scores, or scores of more than one kind
    """
    if not scores:
        raise ScoringError("No scores to rank")
    kinds = {s.kind for s in scores}
    if len(kinds) > 1:
        raise ScoringError("Cannot rank scores of mixed kinds", ", ".join(sorted(k.value for k in kinds)))
    return Ranking([s.decision_id for s in scores], np.array([s.value for s in scores]))


def load_human_ranking(path: Path) -> Dict[str, float]:
    """Read a two-column CSV (decision_id, mean_rank); rank 1 is the strongest preference"""
    path = Path(path)
    if not path.exists():
        raise IngestionError("Human ranking file not found", str(path))
    frame = pd.read_csv(path, dtype={"decision_id": str})
    missing = {"decision_id", "mean_rank"} - set(frame.columns)
    if missing:
        raise IngestionError("Human ranking file is missing columns", ", ".join(sorted(missing)))
    return dict(zip(frame["decision_id"].str.strip(), frame["mean_rank"].astype(float)))


def prior_for(context: "Context | str") -> PriorSpec:
    return PriorSpec(Context(context))
