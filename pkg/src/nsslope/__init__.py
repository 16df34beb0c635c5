"""Sparse precision matrix estimation with sorted-L1 neighborhood regressions."""

from .core import Dataset, center_columns, normal_quantile
from .estimator import FitConfig, PrecisionEstimate, fit_mb_lasso, fit_nsslope, symmetrize
from .lambda_seq import adjusted_sequence, bh_sequence
from .metrics import MetricsReport, aggregate, edge_metrics, mse_metrics
from .slope_solver import SubproblemSpec, duality_gap, solve_slope
from .sorted_l1 import LambdaSequence, prox_sorted_l1, sorted_l1_norm
from .synth import ExperimentConfig, make_block_model, make_hub_model, sample_mvn

__version__ = "0.1.0"

__all__ = [
    "Dataset",
    "ExperimentConfig",
    "FitConfig",
    "LambdaSequence",
    "MetricsReport",
    "PrecisionEstimate",
    "SubproblemSpec",
    "adjusted_sequence",
    "aggregate",
    "bh_sequence",
    "center_columns",
    "duality_gap",
    "edge_metrics",
    "fit_mb_lasso",
    "fit_nsslope",
    "make_block_model",
    "make_hub_model",
    "mse_metrics",
    "normal_quantile",
    "prox_sorted_l1",
    "sample_mvn",
    "solve_slope",
    "sorted_l1_norm",
    "symmetrize",
]
