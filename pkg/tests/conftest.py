"""Shared fixtures: the synthetic choices13k fixture and small hand-made problems"""

import logging
import os

import pytest

from src.choice.dataset import synthetic_choices13k, filter_experiment_subset
from src.choice.models import Gamble, ChoiceProblem

logger = logging.getLogger(__name__)


def make_problem(a, b, problem_id="p1"):
    """Problem from ((payoffs), (probs)) pairs"""
    return ChoiceProblem(problem_id, Gamble(*a), Gamble(*b))


@pytest.fixture(scope="session")
def fixture_data():
    """(dataset, csv_text) of the 200-row synthetic fixture"""
    return synthetic_choices13k()


@pytest.fixture(scope="session")
def filtered_fixture(fixture_data):
    return filter_experiment_subset(fixture_data[0])


@pytest.fixture
def fixture_csv(tmp_path, fixture_data):
    path = tmp_path / "choices13k_fixture.csv"
    path.write_text(fixture_data[1], encoding="utf-8")
    return path


@pytest.fixture
def sure_vs_coin():
    """A = $5 for sure, B = $10 with probability .5"""
    return make_problem(((5.0,), (1.0,)), ((10.0, 0.0), (0.5, 0.5)))


def data_file(env_name):
    """Path from an environment variable, or skip with a data-unavailable reason"""
    path = os.environ.get(env_name)
    if not path or not os.path.exists(path):
        logger.warning(f"{env_name} not set or missing; data unavailable")
        pytest.skip(f"data unavailable: set {env_name}")
    return path
