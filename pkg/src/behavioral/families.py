"""Behavioral choice models - 18 families under one predict-probability interface"""

import logging
from dataclasses import dataclass
from enum import Enum
from typing import Dict, List, Tuple, Optional

import numpy as np
from scipy.special import expit

from ..choice.models import Gamble, ChoiceProblem, ProblemBatch
from ..core.exceptions import ModelError, ValidationError

logger = logging.getLogger(__name__)

ModelParams = Dict[str, float]


class ModelGroup(Enum):
    """Family groups, in report order"""
    HEURISTIC = "heuristic"
    COUNTERFACTUAL = "counterfactual"
    SUBJECTIVE_EU = "subjective-expected-utility"


class ModelFamily(Enum):
    """The 18 behavioral families, declared in report order"""
    BETTER_THAN_AVERAGE = "better-than-average"
    EQUIPROBABLE = "equiprobable"
    LOW_PAYOFF_ELIMINATION = "low-payoff-elimination"
    LOW_EXPECTED_PAYOFF_ELIMINATION = "low-expected-payoff-elimination"
    PROBABLE = "probable"
    MINIMAX = "minimax"
    MAXIMAX = "maximax"
    PRIORITY_HEURISTIC = "priority-heuristic"
    DISAPPOINTMENT_EV = "disappointment-ev"
    DISAPPOINTMENT_EU = "disappointment-eu"
    DISAPPOINTMENT_NO_RESCALE = "disappointment-no-rescale"
    REGRET_EV = "regret-ev"
    REGRET_EU = "regret-eu"
    EXPECTED_VALUE = "expected-value"
    EXPECTED_UTILITY = "expected-utility"
    PROSPECT_THEORY = "prospect-theory"
    TRANSFER_OF_ATTENTION_EXCHANGE = "transfer-of-attention-exchange"
    MIXTURE_OF_THEORIES = "mixture-of-theories"

    @classmethod
    def parse(cls, value: "str | ModelFamily") -> "ModelFamily":
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).strip().lower())
        except ValueError:
            raise ModelError("Unknown model family", str(value))

    @property
    def group(self) -> ModelGroup:
        return _MODELS[self].group

    @property
    def label(self) -> str:
        return self.value.replace("-", " ").title()


@dataclass(frozen=True)
class ParamSpec:
    """One named parameter with its bound box and default"""
    name: str
    lower: float
    upper: float
    default: float


# Shared parameter declarations
PHI = ParamSpec("phi", 0.0, 20.0, 1.0)
EPSILON = ParamSpec("epsilon", 0.0, 1.0, 0.0)
ALPHA = ParamSpec("alpha", 0.05, 2.0, 1.0)
LAMBDA = ParamSpec("lambda", 0.2, 5.0, 1.0)
GAMMA = ParamSpec("gamma", 0.2, 2.0, 1.0)
THRESHOLD = ParamSpec("threshold", -50.0, 50.0, 0.0)
ELATION = ParamSpec("elation", 0.0, 3.0, 0.0)
DISAPPOINTMENT = ParamSpec("disappointment", 0.0, 3.0, 0.0)
REGRET_CURVATURE = ParamSpec("rho", 0.2, 3.0, 1.0)


def power_utility(x: np.ndarray, alpha: float, lam: float) -> np.ndarray:
    """x^alpha on gains, -lambda * (-x)^alpha on losses"""
    mag = np.abs(x) ** alpha
    return np.where(x >= 0, mag, -lam * mag)


def inverse_s_weight(q: np.ndarray, gamma: float) -> np.ndarray:
    """q^g / (q^g + (1-q)^g)^(1/g)"""
    qg = q ** gamma
    return qg / (qg + (1.0 - q) ** gamma) ** (1.0 / gamma)


def log_odds_weight(q: np.ndarray, gamma: float, delta: float) -> np.ndarray:
    """delta*q^g / (delta*q^g + (1-q)^g); gamma = 0 is flat"""
    num = delta * q ** gamma
    return num / (num + (1.0 - q) ** gamma)


def _masked_sum(values: np.ndarray, mask: np.ndarray) -> np.ndarray:
    return np.where(mask, values, 0.0).sum(axis=1)


def _masked_min(values: np.ndarray, mask: np.ndarray) -> np.ndarray:
    return np.where(mask, values, np.inf).min(axis=1)


def _masked_max(values: np.ndarray, mask: np.ndarray) -> np.ndarray:
    return np.where(mask, values, -np.inf).max(axis=1)


def _compare(score_a: np.ndarray, score_b: np.ndarray) -> np.ndarray:
    """1 where A scores higher, 0 where lower, 0.5 on ties"""
    return 0.5 + 0.5 * np.sign(score_a - score_b)


class ChoiceModel:
    """Base class for all families

    Subclasses declare ``family``, ``group`` and ``specs`` and implement
    ``predict_batch``. Families that can value a single gamble also
    implement ``value``.
    """

    family: ModelFamily
    group: ModelGroup
    specs: Tuple[ParamSpec, ...] = ()

    @property
    def param_names(self) -> List[str]:
        return [s.name for s in self.specs]

    @property
    def bounds(self) -> List[Tuple[float, float]]:
        return [(s.lower, s.upper) for s in self.specs]

    def defaults(self) -> ModelParams:
        return {s.name: s.default for s in self.specs}

    def validate_params(self, params: ModelParams) -> ModelParams:
        """Fill defaults and check every parameter against its bound box"""
        unknown = set(params) - set(self.param_names)
        if unknown:
            raise ValidationError(
                f"Unknown parameters for {self.family.value}", ", ".join(sorted(unknown))
            )
        full = self.defaults()
        full.update({k: float(v) for k, v in params.items()})
        for spec in self.specs:
            v = full[spec.name]
            if not (spec.lower <= v <= spec.upper):
                raise ValidationError(
                    f"Parameter {spec.name} outside bounds",
                    f"{v} not in [{spec.lower}, {spec.upper}]",
                )
        return full

    def to_vector(self, params: ModelParams) -> np.ndarray:
        return np.array([params[n] for n in self.param_names], dtype=float)

    def from_vector(self, vector: np.ndarray) -> ModelParams:
        return {n: float(v) for n, v in zip(self.param_names, vector)}

    def value(self, params: ModelParams, payoffs: np.ndarray, probs: np.ndarray, mask: np.ndarray) -> np.ndarray:
        raise ModelError(
            f"Family {self.family.value} compares gambles jointly",
            "it has no single-gamble value",
        )

    def predict_batch(self, params: ModelParams, batch: ProblemBatch) -> np.ndarray:
        raise NotImplementedError("subclasses implement predict_batch")


class ValueModel(ChoiceModel):
    """Families that assign each gamble a subjective value; logistic link on the difference"""

    def predict_batch(self, params: ModelParams, batch: ProblemBatch) -> np.ndarray:
        v_a = self.value(params, *batch.side("a"))
        v_b = self.value(params, *batch.side("b"))
        return expit(params["phi"] * (v_a - v_b))


class ExpectedValueModel(ValueModel):
    family = ModelFamily.EXPECTED_VALUE
    group = ModelGroup.SUBJECTIVE_EU
    specs = (PHI,)

    def value(self, params, payoffs, probs, mask):
        return _masked_sum(probs * payoffs, mask)


class ExpectedUtilityModel(ValueModel):
    family = ModelFamily.EXPECTED_UTILITY
    group = ModelGroup.SUBJECTIVE_EU
    specs = (ALPHA, LAMBDA, PHI)

    def value(self, params, payoffs, probs, mask):
        u = power_utility(payoffs, params["alpha"], params["lambda"])
        return _masked_sum(probs * u, mask)


class ProspectTheoryModel(ValueModel):
    family = ModelFamily.PROSPECT_THEORY
    group = ModelGroup.SUBJECTIVE_EU
    specs = (ALPHA, LAMBDA, GAMMA, PHI)

    def value(self, params, payoffs, probs, mask):
        u = power_utility(payoffs, params["alpha"], params["lambda"])
        w = inverse_s_weight(probs, params["gamma"])
        return _masked_sum(w * u, mask)


class TransferOfAttentionModel(ValueModel):
    """Special TAX: branches ranked best to worst, each lower branch takes
    delta/(n+1) of every higher branch's weight t(q) = q^gamma"""

    family = ModelFamily.TRANSFER_OF_ATTENTION_EXCHANGE
    group = ModelGroup.SUBJECTIVE_EU
    specs = (ALPHA, LAMBDA, GAMMA, ParamSpec("delta", -1.0, 1.0, 0.0), PHI)

    def value(self, params, payoffs, probs, mask):
        # best outcome first, padding last
        order = np.argsort(np.where(mask, -payoffs, np.inf), axis=1, kind="stable")
        x = np.take_along_axis(payoffs, order, axis=1)
        q = np.take_along_axis(probs, order, axis=1)
        m = np.take_along_axis(mask, order, axis=1)

        n = m.sum(axis=1, keepdims=True)
        rank = np.arange(x.shape[1])[None, :]
        t = np.where(m, q ** params["gamma"], 0.0)
        higher = np.cumsum(t, axis=1) - t
        lower_count = np.clip(n - 1 - rank, 0, None)
        delta = params["delta"]
        weights = t - delta * t * lower_count / (n + 1) + delta * higher / (n + 1)
        weights = np.where(m, weights, 0.0)

        u = power_utility(x, params["alpha"], params["lambda"])
        return (weights * u).sum(axis=1) / t.sum(axis=1)


class MixtureOfTheoriesModel(ValueModel):
    """Value mixture of two (utility, weighting) components sharing loss aversion

    Each component weights outcomes with a log-odds function renormalised
    over the gamble's outcomes; gamma = 0 makes a component ignore
    probabilities and average utilities.
    """

    family = ModelFamily.MIXTURE_OF_THEORIES
    group = ModelGroup.SUBJECTIVE_EU
    specs = (
        ParamSpec("w", 0.0, 1.0, 1.0),
        ParamSpec("alpha_1", 0.05, 2.0, 1.0),
        ParamSpec("gamma_1", 0.0, 2.0, 1.0),
        ParamSpec("delta_1", 0.05, 5.0, 1.0),
        ParamSpec("alpha_2", 0.05, 2.0, 1.0),
        ParamSpec("gamma_2", 0.0, 2.0, 1.0),
        ParamSpec("delta_2", 0.05, 5.0, 1.0),
        LAMBDA,
        PHI,
    )

    def component_value(self, params, k: int, payoffs, probs, mask):
        u = power_utility(payoffs, params[f"alpha_{k}"], params["lambda"])
        pi = np.where(mask, log_odds_weight(probs, params[f"gamma_{k}"], params[f"delta_{k}"]), 0.0)
        return (pi * u).sum(axis=1) / pi.sum(axis=1)

    def value(self, params, payoffs, probs, mask):
        w = params["w"]
        v1 = self.component_value(params, 1, payoffs, probs, mask)
        v2 = self.component_value(params, 2, payoffs, probs, mask)
        return w * v1 + (1.0 - w) * v2


class DisappointmentModel(ValueModel):
    """Value = reference + E[D(u - reference)], D linear with separate
    elation and disappointment slopes. The rescaled variants divide each
    deviation by the gamble's utility spread first."""

    use_utility = False
    rescale = True

    def value(self, params, payoffs, probs, mask):
        if self.use_utility:
            u = power_utility(payoffs, params["alpha"], params["lambda"])
        else:
            u = payoffs
        reference = _masked_sum(probs * u, mask)
        deviation = u - reference[:, None]
        if self.rescale:
            spread = _masked_max(u, mask) - _masked_min(u, mask)
            spread = np.where(spread > 0, spread, 1.0)
            deviation = deviation / spread[:, None]
        d = np.where(deviation >= 0, params["elation"] * deviation, params["disappointment"] * deviation)
        return reference + _masked_sum(probs * d, mask)


class DisappointmentEVModel(DisappointmentModel):
    family = ModelFamily.DISAPPOINTMENT_EV
    group = ModelGroup.COUNTERFACTUAL
    specs = (ELATION, DISAPPOINTMENT, PHI)


class DisappointmentEUModel(DisappointmentModel):
    family = ModelFamily.DISAPPOINTMENT_EU
    group = ModelGroup.COUNTERFACTUAL
    specs = (ALPHA, LAMBDA, ELATION, DISAPPOINTMENT, PHI)
    use_utility = True


class DisappointmentNoRescaleModel(DisappointmentModel):
    family = ModelFamily.DISAPPOINTMENT_NO_RESCALE
    group = ModelGroup.COUNTERFACTUAL
    specs = (ELATION, DISAPPOINTMENT, PHI)
    rescale = False


class RegretModel(ChoiceModel):
    """Regret over independently resolved gambles:
    Psi(A, B) = sum_ij p_i q_j Q(u(a_i) - u(b_j)), Q(d) = sign(d)|d|^rho"""

    use_utility = False

    def _utility(self, params, payoffs):
        if self.use_utility:
            return power_utility(payoffs, params["alpha"], params["lambda"])
        return payoffs

    def predict_batch(self, params, batch):
        ua = self._utility(params, batch.payoffs_a)
        ub = self._utility(params, batch.payoffs_b)
        diff = ua[:, :, None] - ub[:, None, :]
        regret = np.sign(diff) * np.abs(diff) ** params["rho"]
        joint = (batch.probs_a * batch.mask_a)[:, :, None] * (batch.probs_b * batch.mask_b)[:, None, :]
        psi = (joint * regret).sum(axis=(1, 2))
        return expit(params["phi"] * psi)


class RegretEVModel(RegretModel):
    family = ModelFamily.REGRET_EV
    group = ModelGroup.COUNTERFACTUAL
    specs = (REGRET_CURVATURE, PHI)


class RegretEUModel(RegretModel):
    family = ModelFamily.REGRET_EU
    group = ModelGroup.COUNTERFACTUAL
    specs = (ALPHA, LAMBDA, REGRET_CURVATURE, PHI)
    use_utility = True


class HeuristicModel(ChoiceModel):
    """Deterministic rule emitting 0 / 0.5 / 1, mixed with a lapse rate:
    P(A) = epsilon * 0.5 + (1 - epsilon) * decision"""

    group = ModelGroup.HEURISTIC
    specs = (EPSILON,)

    def decide(self, params: ModelParams, batch: ProblemBatch) -> np.ndarray:
        # single-gamble criteria compare directly
        return _compare(self.value(params, *batch.side("a")), self.value(params, *batch.side("b")))

    def predict_batch(self, params, batch):
        eps = params["epsilon"]
        return eps * 0.5 + (1.0 - eps) * self.decide(params, batch)


class MinimaxModel(HeuristicModel):
    family = ModelFamily.MINIMAX

    def value(self, params, payoffs, probs, mask):
        return _masked_min(payoffs, mask)


class MaximaxModel(HeuristicModel):
    family = ModelFamily.MAXIMAX

    def value(self, params, payoffs, probs, mask):
        return _masked_max(payoffs, mask)


class EquiprobableModel(HeuristicModel):
    family = ModelFamily.EQUIPROBABLE

    def value(self, params, payoffs, probs, mask):
        return _masked_sum(payoffs, mask) / mask.sum(axis=1)


class ProbableModel(HeuristicModel):
    """Mean payoff over outcomes at least as likely as 1/(number of outcomes)"""

    family = ModelFamily.PROBABLE

    def value(self, params, payoffs, probs, mask):
        n = mask.sum(axis=1, keepdims=True)
        probable = mask & (probs >= 1.0 / n - 1e-12)
        return _masked_sum(payoffs, probable) / probable.sum(axis=1)


class BetterThanAverageModel(HeuristicModel):
    """More outcomes above the grand mean payoff of both gambles wins"""

    family = ModelFamily.BETTER_THAN_AVERAGE

    def decide(self, params, batch):
        total = _masked_sum(batch.payoffs_a, batch.mask_a) + _masked_sum(batch.payoffs_b, batch.mask_b)
        count = batch.mask_a.sum(axis=1) + batch.mask_b.sum(axis=1)
        grand_mean = (total / count)[:, None]
        above_a = (batch.mask_a & (batch.payoffs_a > grand_mean)).sum(axis=1)
        above_b = (batch.mask_b & (batch.payoffs_b > grand_mean)).sum(axis=1)
        return _compare(above_a, above_b)


class EliminationModel(HeuristicModel):
    """Eliminate the option whose worst criterion falls below a fitted
    threshold; when neither or both fall below, choose by expected value"""

    specs = (EPSILON, THRESHOLD)

    def worst(self, payoffs, probs, mask) -> np.ndarray:
        raise NotImplementedError

    def decide(self, params, batch):
        tau = params["threshold"]
        below_a = self.worst(*batch.side("a")) < tau
        below_b = self.worst(*batch.side("b")) < tau
        ev = _compare(
            _masked_sum(batch.probs_a * batch.payoffs_a, batch.mask_a),
            _masked_sum(batch.probs_b * batch.payoffs_b, batch.mask_b),
        )
        return np.where(below_a & ~below_b, 0.0, np.where(below_b & ~below_a, 1.0, ev))


class LowPayoffEliminationModel(EliminationModel):
    family = ModelFamily.LOW_PAYOFF_ELIMINATION

    def worst(self, payoffs, probs, mask):
        return _masked_min(payoffs, mask)


class LowExpectedPayoffEliminationModel(EliminationModel):
    family = ModelFamily.LOW_EXPECTED_PAYOFF_ELIMINATION

    def worst(self, payoffs, probs, mask):
        return _masked_min(probs * payoffs, mask)


class PriorityHeuristicModel(HeuristicModel):
    """Minimum gain, then probability of the minimum, then maximum gain.
    Reasons stop at differences of 1/10 of the largest absolute payoff
    (outcomes) or 0.1 (probabilities)."""

    family = ModelFamily.PRIORITY_HEURISTIC

    def decide(self, params, batch):
        min_a = _masked_min(batch.payoffs_a, batch.mask_a)
        min_b = _masked_min(batch.payoffs_b, batch.mask_b)
        max_a = _masked_max(batch.payoffs_a, batch.mask_a)
        max_b = _masked_max(batch.payoffs_b, batch.mask_b)
        aspiration = 0.1 * np.maximum(
            _masked_max(np.abs(batch.payoffs_a), batch.mask_a),
            _masked_max(np.abs(batch.payoffs_b), batch.mask_b),
        )
        p_min_a = _masked_sum(batch.probs_a, batch.mask_a & (batch.payoffs_a == min_a[:, None]))
        p_min_b = _masked_sum(batch.probs_b, batch.mask_b & (batch.payoffs_b == min_b[:, None]))

        d_min = min_a - min_b
        d_pmin = p_min_a - p_min_b
        by_min = (np.abs(d_min) > 0) & (np.abs(d_min) >= aspiration)
        by_pmin = ~by_min & (np.abs(d_pmin) > 0) & (np.abs(d_pmin) >= 0.1)
        # lower probability of the worst outcome is better
        return np.where(
            by_min,
            _compare(min_a, min_b),
            np.where(by_pmin, _compare(p_min_b, p_min_a), _compare(max_a, max_b)),
        )


_MODELS: Dict[ModelFamily, ChoiceModel] = {
    m.family: m
    for m in (
        BetterThanAverageModel(),
        EquiprobableModel(),
        LowPayoffEliminationModel(),
        LowExpectedPayoffEliminationModel(),
        ProbableModel(),
        MinimaxModel(),
        MaximaxModel(),
        PriorityHeuristicModel(),
        DisappointmentEVModel(),
        DisappointmentEUModel(),
        DisappointmentNoRescaleModel(),
        RegretEVModel(),
        RegretEUModel(),
        ExpectedValueModel(),
        ExpectedUtilityModel(),
        ProspectTheoryModel(),
        TransferOfAttentionModel(),
        MixtureOfTheoriesModel(),
    )
}

VALUE_BASED_FAMILIES = [f for f, m in _MODELS.items() if not isinstance(m, HeuristicModel)]


def get_model(family: "str | ModelFamily") -> ChoiceModel:
    """Look up the model object for a family id"""
    return _MODELS[ModelFamily.parse(family)]


def model_value(family: "str | ModelFamily", params: Optional[ModelParams], g: Gamble) -> float:
    """Subjective value of one gamble under a family"""
    model = get_model(family)
    full = model.validate_params(params or {})
    batch = ProblemBatch.from_problems([ChoiceProblem("value", g, g)])
    return float(model.value(full, *batch.side("a"))[0])


def predict_choice_prob(family: "str | ModelFamily", params: Optional[ModelParams], p: ChoiceProblem) -> float:
    """Probability of choosing A on a single problem"""
    model = get_model(family)
    full = model.validate_params(params or {})
    return float(model.predict_batch(full, ProblemBatch.from_problems([p]))[0])


def predict_batch(family: "str | ModelFamily", params: Optional[ModelParams], batch: ProblemBatch) -> np.ndarray:
    """Probability of choosing A for every problem of a batch"""
    model = get_model(family)
    return model.predict_batch(model.validate_params(params or {}), batch)
