"""Expected-value baseline - the rational reference model"""

import math
from typing import List

import numpy as np

from .models import Gamble, ChoiceProblem


def expected_value(g: Gamble) -> float:
    """Probability-weighted mean payoff of a gamble"""
    g.validate()
    return math.fsum(q * x for x, q in zip(g.payoffs, g.probs))


def max_ev_prediction(p: ChoiceProblem) -> float:
    """Probability of choosing A under EV maximisation

    Returns 1.0 or 0.0 for a strict EV difference and 0.5 on an exact tie.
    """
    ev_a = expected_value(p.gamble_a)
    ev_b = expected_value(p.gamble_b)
    if ev_a > ev_b:
        return 1.0
    if ev_a < ev_b:
        return 0.0
    return 0.5


def max_ev_vector(problems: List[ChoiceProblem]) -> np.ndarray:
    """max_ev_prediction for every problem, in order"""
    return np.array([max_ev_prediction(p) for p in problems], dtype=float)
