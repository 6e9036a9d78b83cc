"""Experiment runners, run records and report tables"""

from .records import RunRecord, RunLock, RawSink, check_failure_rate, MAX_FAILURE_RATE, RECORD_NAME
from .common import derive_seed, load_dataset, create_agent_from_settings
from .forward import run_forward, run_temperature_sweep, aggregate_forward
from .inverse import run_inverse, catalog_pairs, oracle_scores
from .fit import run_fit, fit_targets, load_fit_report
from .reporting import (
    forward_table,
    forward_heatmap,
    inverse_table,
    rational_matrix,
    fit_table,
    human_anchor,
    record_label,
    render_table,
    write_table,
)

__all__ = [
    "RunRecord",
    "RunLock",
    "RawSink",
    "check_failure_rate",
    "MAX_FAILURE_RATE",
    "RECORD_NAME",
    "derive_seed",
    "load_dataset",
    "create_agent_from_settings",
    "run_forward",
    "run_temperature_sweep",
    "aggregate_forward",
    "run_inverse",
    "catalog_pairs",
    "oracle_scores",
    "run_fit",
    "fit_targets",
    "load_fit_report",
    "forward_table",
    "forward_heatmap",
    "inverse_table",
    "rational_matrix",
    "fit_table",
    "human_anchor",
    "record_label",
    "render_table",
    "write_table",
]
