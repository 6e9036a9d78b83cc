"""Risky-choice problems, the expected-value baseline and choices13k ingestion"""

from .models import Gamble, ChoiceProblem, ChoiceObservation, ChoiceDataset, ProblemBatch
from .baseline import expected_value, max_ev_prediction, max_ev_vector
from .dataset import (
    load_choices13k,
    filter_experiment_subset,
    write_dataset_jsonl,
    read_dataset_jsonl,
    synthetic_choices13k,
)

__all__ = [
    "Gamble",
    "ChoiceProblem",
    "ChoiceObservation",
    "ChoiceDataset",
    "ProblemBatch",
    "expected_value",
    "max_ev_prediction",
    "max_ev_vector",
    "load_choices13k",
    "filter_experiment_subset",
    "write_dataset_jsonl",
    "read_dataset_jsonl",
    "synthetic_choices13k",
]
