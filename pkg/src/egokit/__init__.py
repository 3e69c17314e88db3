"""Kriging surrogates and batch Efficient Global Optimization.

Main entry points: :func:`fit` / :func:`fit_mle` for Gaussian-process
models, :func:`expected_improvement` and :func:`propose_batch_cl` for
acquisition, and the ask/tell campaign in :mod:`egokit.ego`.
"""

from .acquisition import (
    BatchProposal,
    Incumbent,
    expected_improvement,
    maximize_acquisition,
    propose_batch_cl,
    qei_mc,
)
from .benchfn import REGISTRY, branin, get_objective, hartmann6, synthetic_gp_objective
from .design import BoxDomain, DesignMatrix, lhs, maximin_improve
from .diagnostics import (
    MetricsReport,
    conditional_correlation,
    ei_posterior_distribution,
    fit_linear_baseline,
    loo_metrics,
)
from .ego import CampaignConfig, OptimizationState, ask, run_closed_loop, start, tell
from .errors import EgoError
from .flowrate import FlowCurve, efficiency_from, fit_quadratic
from .kernel import KernelSpec, correlation_1d, covariance_matrix
from .kriging import GpModel, TrainingSet, estimate_params, fit, fit_mle, loo, predict

__version__ = "0.1.0"

__all__ = [
    "BatchProposal",
    "BoxDomain",
    "CampaignConfig",
    "DesignMatrix",
    "EgoError",
    "FlowCurve",
    "GpModel",
    "Incumbent",
    "KernelSpec",
    "MetricsReport",
    "OptimizationState",
    "REGISTRY",
    "TrainingSet",
    "ask",
    "branin",
    "conditional_correlation",
    "correlation_1d",
    "covariance_matrix",
    "efficiency_from",
    "ei_posterior_distribution",
    "estimate_params",
    "expected_improvement",
    "fit",
    "fit_linear_baseline",
    "fit_mle",
    "fit_quadratic",
    "get_objective",
    "hartmann6",
    "lhs",
    "loo",
    "loo_metrics",
    "maximin_improve",
    "maximize_acquisition",
    "predict",
    "propose_batch_cl",
    "qei_mc",
    "run_closed_loop",
    "start",
    "synthetic_gp_objective",
    "tell",
]
