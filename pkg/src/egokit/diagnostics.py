"""Surrogate-quality and batch-quality diagnostics.

Leave-one-out metrics (R², RMSE, RMA, CR95), the conditional correlation of a
proposed batch, the posterior distribution of its realized improvement, and
an ordinary-least-squares linear baseline.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateData, DimensionMismatch, RankDeficient
from .kriging import GpModel, posterior_cov, posterior_sample

COVERAGE_Z = 1.96


@dataclass(frozen=True)
class MetricsReport:
    r_squared: float
    rmse: float
    rma: float
    cr95: float

    def as_dict(self) -> dict:
        return {"r_squared": self.r_squared, "rmse": self.rmse, "rma": self.rma, "cr95": self.cr95}


@dataclass(frozen=True)
class EiDistribution:
    samples: np.ndarray
    a_posteriori: float


def loo_metrics(y, yhat, loo_sd) -> MetricsReport:
    """Summarize predictions against observations.

    ``sd(y)`` in RMA is the population standard deviation (divisor N).
    """
    y, yhat, sd = (np.asarray(a, dtype=float).ravel() for a in (y, yhat, loo_sd))
    if not (len(y) == len(yhat) == len(sd)):
        raise DimensionMismatch("y, yhat and loo_sd must have equal lengths")
    if len(y) < 2:
        raise DegenerateData("need at least two observations")
    spread = float(np.std(y))
    if spread == 0.0:
        raise DegenerateData("observations have zero standard deviation")
    resid = y - yhat
    ss_res = float(resid @ resid)
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    return MetricsReport(
        r_squared=1.0 - ss_res / ss_tot,
        rmse=float(np.sqrt(ss_res / len(y))),
        rma=float(np.max(np.abs(resid)) / spread),
        cr95=float(np.mean(np.abs(resid) <= COVERAGE_Z * sd)),
    )


def conditional_correlation(model: GpModel, Xnew) -> np.ndarray:
    C = posterior_cov(model, Xnew)
    var = np.diag(C)
    if np.any(var <= 1e-14 * model.sigma2):
        raise DegenerateData("a point has (numerically) zero posterior variance")
    s = np.sqrt(var)
    corr = np.clip(C / np.outer(s, s), -1.0, 1.0)
    np.fill_diagonal(corr, 1.0)
    return corr


def ei_posterior_distribution(model: GpModel, batch, doe_best: float, n_draws: int = 1000, seed=0) -> EiDistribution:
    """Posterior draws of the batch's improvement over ``doe_best``.

    The a-posteriori value compares the best predicted mean of the batch
    with ``doe_best`` and may be negative.
    """
    if n_draws < 100:
        raise ValueError("n_draws must be at least 100")
    batch = np.atleast_2d(np.asarray(batch, dtype=float))
    draws = posterior_sample(model, batch, n_draws, seed)
    samples = np.maximum(draws.max(axis=1) - doe_best, 0.0)
    mean, _ = model.predict_unit(model.to_unit(batch))
    return EiDistribution(samples, float(mean.max() - doe_best))


def fit_linear_baseline(X, y) -> tuple[np.ndarray, np.ndarray]:
    """Ordinary least squares ``y ~ b0 + sum_j b_j x_j``; returns (coefficients, fitted)."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    y = np.asarray(y, dtype=float).ravel()
    n, d = X.shape
    if n != len(y):
        raise DimensionMismatch(f"{n} rows but {len(y)} observations")
    if n < d + 2:
        raise RankDeficient(f"{n} observations cannot support {d + 1} coefficients plus a residual")
    A = np.column_stack([np.ones(n), X])
    coef, _, rank, _ = np.linalg.lstsq(A, y, rcond=None)
    if rank < d + 1:
        raise RankDeficient(f"design matrix has rank {rank} < {d + 1}")
    return coef, A @ coef


def histogram(samples, bin_width: float) -> dict:
    """Counts on bins ``[k w, (k+1) w)`` starting at zero (improvements are nonnegative)."""
    if not bin_width > 0:
        raise ValueError("bin_width must be positive")
    samples = np.asarray(samples, dtype=float)
    nbins = max(1, int(np.floor(samples.max() / bin_width)) + 1) if samples.size else 1
    edges = bin_width * np.arange(nbins + 1)
    counts, _ = np.histogram(samples, bins=edges)
    return {"bin_width": bin_width, "edges": edges.tolist(), "counts": counts.astype(int).tolist()}
