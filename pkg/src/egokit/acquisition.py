"""Expected improvement (single point and batch) and its maximization.

Everything here maximizes: the incumbent is the largest observed value and
improvement is ``(Y(x) - incumbent)^+``.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import cdist

from .design import BoxDomain, lhs_unit
from .errors import DegenerateDesign, DimensionMismatch
from .kriging import GpModel, posterior_sample, refit
from .numerics import RandomStream, std_normal_cdf, std_normal_pdf
from .optim import nelder_mead_multistart

logger = logging.getLogger(__name__)

STRATEGIES = ("single", "cl_min", "cl_max", "cl_mean", "cl_mixed")
LIARS = ("min", "max", "mean", "mixed")

#: Minimum separation between proposed and known points, normalized units.
MIN_SEPARATION = 1e-9


@dataclass(frozen=True)
class Incumbent:
    value: float

    @classmethod
    def of(cls, y) -> "Incumbent":
        return cls(float(np.max(y)))


@dataclass(frozen=True)
class BatchProposal:
    points: np.ndarray
    ei_single: np.ndarray
    strategy: str
    mc_qei: float | None = None
    rejected_qei: float | None = None

    def __len__(self) -> int:
        return self.points.shape[0]


def _stream(seed) -> RandomStream:
    return seed if isinstance(seed, RandomStream) else RandomStream(seed)


def ei_closed_form(mean, sd, incumbent: float, sd_floor=0.0):
    """``(m - M) Phi(z) + s phi(z)`` with ``z = (m - M)/s``; ``(m - M)^+`` where ``s <= sd_floor``."""
    mean = np.asarray(mean, dtype=float)
    sd = np.asarray(sd, dtype=float)
    gap = mean - incumbent
    flat = sd <= sd_floor
    safe_sd = np.where(flat, 1.0, sd)
    z = gap / safe_sd
    ei = gap * std_normal_cdf(z) + safe_sd * std_normal_pdf(z)
    ei = np.where(flat, np.maximum(gap, 0.0), np.maximum(ei, 0.0))
    return float(ei) if ei.ndim == 0 else ei


#: EI falls back to ``(mean - M)^+`` when the predictive sd is below this times sigma.
SD_GUARD = 1e-12


def _sd_floor(model: GpModel) -> float:
    return SD_GUARD * float(np.sqrt(model.sigma2))


def ei_unit(model: GpModel, U: np.ndarray, incumbent: float) -> np.ndarray:
    """Vectorized EI at model unit-cube points."""
    mean, var = model.predict_unit(U)
    return ei_closed_form(mean, np.sqrt(var), incumbent, _sd_floor(model))


def expected_improvement(model: GpModel, x, incumbent: Incumbent | float):
    """Closed-form expected improvement at one point (float) or many (array)."""
    value = incumbent.value if isinstance(incumbent, Incumbent) else float(incumbent)
    x = np.asarray(x, dtype=float)
    out = ei_unit(model, model.to_unit(x), value)
    return float(out[0]) if x.ndim == 1 else out


def qei_mc(model: GpModel, points, incumbent, n_draws: int = 10_000, seed=0) -> tuple[float, float]:
    """Monte Carlo multi-point EI and its standard error.

    Draws come from the joint posterior at ``points``; passing the same seed
    for two batches of equal size gives common random numbers.
    """
    if n_draws < 100:
        raise ValueError("n_draws must be at least 100")
    value = incumbent.value if isinstance(incumbent, Incumbent) else float(incumbent)
    points = np.atleast_2d(np.asarray(points, dtype=float))
    if points.shape[1] != model.dim:
        raise DimensionMismatch(f"points of shape {points.shape} for a {model.dim}-d model")
    samples = posterior_sample(model, points, n_draws, seed)
    gains = np.maximum(samples.max(axis=1) - value, 0.0)
    return float(gains.mean()), float(gains.std(ddof=1) / np.sqrt(n_draws))


def maximize_acquisition(
    model: GpModel,
    incumbent,
    domain: BoxDomain,
    n_starts: int = 20,
    seed=0,
    evals_per_dim: int = 200,
    pool_per_dim: int = 100,
) -> tuple[np.ndarray, float]:
    """Multistart maximization of EI over the box.

    A Latin hypercube pool of ``pool_per_dim * d`` points is scored and the
    ``n_starts`` best become the starts of simultaneous Nelder-Mead searches
    (``evals_per_dim * d`` evaluations each). Returns the best point found
    and its EI.
    """
    if n_starts < 1:
        raise ValueError("n_starts must be positive")
    if domain.dim != model.dim:
        raise DimensionMismatch(f"domain is {domain.dim}-d but the model is {model.dim}-d")
    value = incumbent.value if isinstance(incumbent, Incumbent) else float(incumbent)
    d = domain.dim
    stream = _stream(seed)

    def neg_ei(V: np.ndarray) -> np.ndarray:
        return -ei_unit(model, model.domain.to_unit(domain.from_unit(V)), value)

    pool = lhs_unit(max(n_starts, pool_per_dim * d), d, stream)
    order = np.argsort(neg_ei(pool), kind="stable")
    starts = pool[order[:n_starts]]
    res = nelder_mead_multistart(
        neg_ei,
        starts,
        0.0,
        1.0,
        max_evals=evals_per_dim * d,
        step=0.05,
        xatol=1e-4,
        fatol=1e-10 * float(np.sqrt(model.sigma2)),
    )
    best = res.best
    point = domain.clip(domain.from_unit(res.x[best]))
    ei = -float(neg_ei(domain.to_unit(point)[None, :])[0])
    return point, ei


def _too_close(model: GpModel, x: np.ndarray) -> bool:
    U = model.to_unit(x)
    return bool(cdist(U, model.unit_X).min() < MIN_SEPARATION)


def _nudge(x: np.ndarray, domain: BoxDomain) -> np.ndarray:
    step = 1e-6 * domain.width
    up = x + step <= np.asarray(domain.upper)
    return np.where(up, x + step, x - step)


def _cl_batch(model, incumbent, domain, b, liar, stream, n_starts, evals_per_dim, first=None):
    y_obs = model.training.y
    fantasy = model
    best = incumbent
    points = []
    for i in range(b):
        if i == 0 and first is not None:
            x = first
        else:
            x, _ = maximize_acquisition(fantasy, best, domain, n_starts, stream.split(i), evals_per_dim)
        if _too_close(fantasy, x):
            x = _nudge(x, domain)
            if _too_close(fantasy, x):
                raise DegenerateDesign("proposed point duplicates a known point")
        points.append(x)
        if i == b - 1:
            break
        if liar == "max":
            lie = float(np.max(y_obs))
        elif liar == "min":
            lie = float(np.min(y_obs))
        else:
            lie = float(fantasy.predict_unit(fantasy.to_unit(x))[0][0])
        fantasy = refit(fantasy, fantasy.training.append(x, lie))
        best = max(best, lie)
    return np.vstack(points)


def propose_batch_cl(
    model: GpModel,
    incumbent,
    domain: BoxDomain,
    b: int,
    strategy: str = "mixed",
    seed=0,
    n_starts: int = 20,
    evals_per_dim: int = 200,
    qei_draws: int = 10_000,
) -> BatchProposal:
    """Build a batch of ``b`` points with the Constant Liar heuristic.

    ``strategy`` is one of ``min``, ``max``, ``mean`` or ``mixed`` (the
    ``cl_`` prefix is accepted). After each EI maximization the point is
    added to a copy of the model with a lie as its value (the smallest or
    largest observation, or the current Kriging mean) and kernel parameters
    held fixed. ``mixed`` builds the min and max batches and keeps the one
    with the larger Monte Carlo multi-point EI under common random numbers.
    """
    if b < 1:
        raise ValueError("batch size must be positive")
    liar = strategy[3:] if strategy.startswith("cl_") else strategy
    if liar not in LIARS:
        raise ValueError(f"unknown liar strategy {strategy!r}")
    value = incumbent.value if isinstance(incumbent, Incumbent) else float(incumbent)
    stream = _stream(seed)

    if b == 1:
        x, _ = maximize_acquisition(model, value, domain, n_starts, stream.split(0), evals_per_dim)
        if _too_close(model, x):
            x = _nudge(x, domain)
        pts = x[None, :]
        return BatchProposal(pts, np.atleast_1d(expected_improvement(model, pts, value)), "single")

    mc_seed = stream.split(10_000)
    if liar == "mixed":
        candidates = {}
        # both liars start from the same model, so their first point is shared
        first, _ = maximize_acquisition(model, value, domain, n_starts, stream.split(0), evals_per_dim)
        for kind in ("min", "max"):
            pts = _cl_batch(model, value, domain, b, kind, stream, n_starts, evals_per_dim, first)
            candidates[kind] = (pts, qei_mc(model, pts, value, qei_draws, mc_seed)[0])
        (q_min, q_max) = candidates["min"][1], candidates["max"][1]
        kind, other = ("max", "min") if q_max > q_min else ("min", "max")
        pts, q = candidates[kind]
        logger.debug("mixed liar: qEI min=%.6g max=%.6g -> %s", q_min, q_max, kind)
        return BatchProposal(
            pts, expected_improvement(model, pts, value), "cl_mixed", q, candidates[other][1]
        )
    pts = _cl_batch(model, value, domain, b, liar, stream, n_starts, evals_per_dim)
    q = qei_mc(model, pts, value, qei_draws, mc_seed)[0]
    return BatchProposal(pts, expected_improvement(model, pts, value), f"cl_{liar}", q)

