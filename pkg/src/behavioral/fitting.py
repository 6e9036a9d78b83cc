"""Parameter fitting by MSE minimisation and the 18-family comparison"""

import json
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Tuple, Optional, Dict, Any, Sequence

import numpy as np
from scipy.optimize import minimize

from ..choice.models import ChoiceProblem, ProblemBatch
from ..core.exceptions import FitError, ValidationError
from .families import ModelFamily, ModelParams, get_model

logger = logging.getLogger(__name__)

# Objective assigned to parameter vectors that produce non-finite predictions
DIVERGED_OBJECTIVE = 1e6


@dataclass
class FitResult:
    """Best fit of one family"""
    family: ModelFamily
    params: ModelParams
    mse: float
    restarts: int
    converged: bool
    start_mses: List[float] = field(default_factory=list)
    restart_mses: List[float] = field(default_factory=list)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "family": self.family.value,
            "group": self.family.group.value,
            "params": self.params,
            "mse": self.mse,
            "restarts": self.restarts,
            "converged": self.converged,
        }


@dataclass
class ComparisonRow:
    """One row of a model comparison; ``error`` is set when the fit failed"""
    family: ModelFamily
    result: Optional[FitResult] = None
    error: Optional[str] = None

    @property
    def mse(self) -> Optional[float]:
        return self.result.mse if self.result else None

    def to_dict(self) -> Dict[str, Any]:
        if self.result:
            data = self.result.to_dict()
        else:
            data = {"family": self.family.value, "group": self.family.group.value, "mse": None}
        data["error"] = self.error
        return data


def _prepare(targets: Sequence[Tuple[ChoiceProblem, float]]) -> Tuple[ProblemBatch, np.ndarray]:
    if not targets:
        raise FitError("Cannot fit a model to an empty dataset")
    y = np.array([float(t) for _, t in targets], dtype=float)
    if np.any(~np.isfinite(y)) or np.any((y < 0.0) | (y > 1.0)):
        raise ValidationError("Fit targets must lie in [0, 1]")
    return ProblemBatch.from_problems([p for p, _ in targets]), y


def fit_model(
    family: "str | ModelFamily",
    targets: Sequence[Tuple[ChoiceProblem, float]],
    restarts: int = 20,
    seed: int = 0,
    max_iter: int = 500,
    tolerance: float = 1e-6,
    workers: int = 1,
) -> FitResult:
    """Fit one family to target choice probabilities

    Args:
        family: Family id
        targets: (problem, target P(A)) pairs
        restarts: Number of random starts inside the bound box
        seed: Root seed; every restart draws from its own spawned generator
        max_iter: Simplex iterations per restart
        tolerance: Stop once the simplex diameter falls below this
        workers: Restarts evaluated concurrently

    Returns:
        FitResult: the best restart

    Raises:
        FitError: Empty dataset, or every restart diverged
    """
    model = get_model(family)
    batch, y = _prepare(targets)
    if restarts < 1:
        raise FitError("At least one restart is required", str(restarts))

    lower = np.array([lo for lo, _ in model.bounds])
    upper = np.array([hi for _, hi in model.bounds])

    def objective(vector: np.ndarray) -> float:
        params = model.from_vector(np.clip(vector, lower, upper))
        with np.errstate(all="ignore"):
            pred = model.predict_batch(params, batch)
        mse = float(np.mean((pred - y) ** 2))
        return mse if np.isfinite(mse) else DIVERGED_OBJECTIVE

    children = np.random.SeedSequence(seed).spawn(restarts)

    def run_restart(index: int):
        rng = np.random.default_rng(children[index])
        x0 = rng.uniform(lower, upper)
        start = objective(x0)
        res = minimize(
            objective,
            x0,
            method="Nelder-Mead",
            bounds=model.bounds,
            options={"maxiter": max_iter, "xatol": tolerance, "fatol": np.inf},
        )
        return index, start, np.clip(res.x, lower, upper), float(res.fun), bool(res.success)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            outcomes = list(pool.map(run_restart, range(restarts)))
    else:
        outcomes = [run_restart(i) for i in range(restarts)]
    outcomes.sort(key=lambda o: o[0])

    usable = [o for o in outcomes if o[3] < DIVERGED_OBJECTIVE]
    if not usable:
        raise FitError(f"All {restarts} restarts diverged", model.family.value)

    # min by MSE, ties to the lower restart index
    best = min(usable, key=lambda o: (o[3], o[0]))
    result = FitResult(
        family=model.family,
        params=model.from_vector(best[2]),
        mse=best[3],
        restarts=restarts,
        converged=best[4],
        start_mses=[o[1] for o in outcomes],
        restart_mses=[o[3] for o in outcomes],
    )
    logger.debug(f"Fitted {model.family.value}: mse={result.mse:.6g}, params={result.params}")
    return result


def model_comparison(
    targets: Sequence[Tuple[ChoiceProblem, float]],
    families: Optional[List[ModelFamily]] = None,
    **fit_kwargs,
) -> List[ComparisonRow]:
    """Fit every family and collect one row each, in report order

    A failing family yields a row carrying its error; the table is still produced.
    """
    selected = families or list(ModelFamily)
    order = {f: i for i, f in enumerate(ModelFamily)}
    rows = []
    for family in sorted(selected, key=lambda f: order[f]):
        try:
            rows.append(ComparisonRow(family, result=fit_model(family, targets, **fit_kwargs)))
        except (FitError, ValidationError) as e:
            logger.warning(f"Fitting {family.value} failed: {e}")
            rows.append(ComparisonRow(family, error=str(e)))
    return rows


def best_row(rows: List[ComparisonRow]) -> Optional[ComparisonRow]:
    """Row with the smallest MSE among successful fits"""
    fitted = [r for r in rows if r.result is not None]
    return min(fitted, key=lambda r: r.result.mse) if fitted else None


def write_fit_report(rows: List[ComparisonRow], path: Path) -> Path:
    """Write one JSON line per family"""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as f:
        for row in rows:
            f.write(json.dumps(row.to_dict(), ensure_ascii=False) + "\n")
    logger.info(f"Fit report written to {path}")
    return path
