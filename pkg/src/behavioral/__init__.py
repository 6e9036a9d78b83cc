"""Behavioral choice models and their fitting"""

from .families import (
    ModelFamily,
    ModelGroup,
    ModelParams,
    ParamSpec,
    ChoiceModel,
    get_model,
    model_value,
    predict_choice_prob,
    predict_batch,
)
from .fitting import FitResult, ComparisonRow, fit_model, model_comparison, best_row, write_fit_report

__all__ = [
    "ModelFamily",
    "ModelGroup",
    "ModelParams",
    "ParamSpec",
    "ChoiceModel",
    "get_model",
    "model_value",
    "predict_choice_prob",
    "predict_batch",
    "FitResult",
    "ComparisonRow",
    "fit_model",
    "model_comparison",
    "best_row",
    "write_fit_report",
]
