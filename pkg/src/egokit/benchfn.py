"""Benchmark objectives standing in for an expensive simulator.

All registered objectives are minimization problems; the optimizer maximizes,
so closed-loop runs negate them.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .design import BoxDomain, lhs
from .errors import OutOfDomain
from .kernel import KernelSpec
from .kriging import TrainingSet, fit
from .numerics import RandomStream


def _batch(x) -> tuple[np.ndarray, bool]:
    x = np.asarray(x, dtype=float)
    return np.atleast_2d(x), x.ndim == 1


def branin(x):
    """Branin-Hoo function on [-5, 10] x [0, 15]."""
    X, single = _batch(x)
    x1, x2 = X[:, 0], X[:, 1]
    b, c, t = 5.1 / (4.0 * np.pi**2), 5.0 / np.pi, 1.0 / (8.0 * np.pi)
    out = (x2 - b * x1**2 + c * x1 - 6.0) ** 2 + 10.0 * (1.0 - t) * np.cos(x1) + 10.0
    return float(out[0]) if single else out


_H6_ALPHA = np.array([1.0, 1.2, 3.0, 3.2])
_H6_A = np.array(
    [
        [10.0, 3.0, 17.0, 3.5, 1.7, 8.0],
        [0.05, 10.0, 17.0, 0.1, 8.0, 14.0],
        [3.0, 3.5, 1.7, 10.0, 17.0, 8.0],
        [17.0, 8.0, 0.05, 10.0, 0.1, 14.0],
    ]
)
_H6_P = 1e-4 * np.array(
    [
        [1312, 1696, 5569, 124, 8283, 5886],
        [2329, 4135, 8307, 3736, 1004, 9991],
        [2348, 1451, 3522, 2883, 3047, 6650],
        [4047, 8828, 8732, 5743, 1091, 381],
    ]
)


def hartmann6(x):
    """Six-dimensional Hartmann function on the unit cube."""
    X, single = _batch(x)
    if X.shape[1] != 6:
        raise OutOfDomain(f"hartmann6 takes 6-d points, got {X.shape[1]}-d")
    if np.any(X < 0.0) or np.any(X > 1.0):
        raise OutOfDomain("hartmann6 is defined on [0, 1]^6")
    inner = np.einsum("kj,nkj->nk", _H6_A, (X[:, None, :] - _H6_P[None, :, :]) ** 2)
    out = -np.exp(-inner) @ _H6_ALPHA
    return float(out[0]) if single else out


@dataclass(frozen=True)
class ObjectiveSpec:
    name: str
    function: Callable
    domain: BoxDomain
    global_optimum_value: float
    global_optimum_points: tuple
    orientation: str = "minimize"

    def __call__(self, x):
        return self.function(x)

    def validate(self, tol: float = 1e-6) -> bool:
        return all(abs(self.function(np.asarray(p)) - self.global_optimum_value) <= tol for p in self.global_optimum_points)


# Minimizers: Branin's three are closed form (the squared term vanishes and
# cos(x1) = -1, leaving 10/(8 pi)); Hartmann-6's is a locally refined
# version of the usual tabulated point.
REGISTRY = {
    "branin": ObjectiveSpec(
        "branin",
        branin,
        BoxDomain((-5.0, 0.0), (10.0, 15.0)),
        10.0 / (8.0 * np.pi),
        ((-np.pi, 12.275), (np.pi, 2.275), (3.0 * np.pi, 2.475)),
    ),
    "hartmann6": ObjectiveSpec(
        "hartmann6",
        hartmann6,
        BoxDomain.unit(6),
        -3.3223680114155147,
        ((0.20168951, 0.15001069, 0.47687398, 0.27533243, 0.31165162, 0.65730054),),
    ),
}


def get_objective(name: str) -> ObjectiveSpec:
    try:
        return REGISTRY[name]
    except KeyError:
        raise KeyError(f"unknown objective {name!r}; registered: {sorted(REGISTRY)}") from None


def sample_prior(spec: KernelSpec, X, seed=0, domain: BoxDomain | None = None) -> np.ndarray:
    """One joint draw of a centred GP at the rows of ``X``."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    model = fit(TrainingSet(X, np.zeros(len(X))), spec, known_mean=0.0, domain=domain)
    stream = seed if isinstance(seed, RandomStream) else RandomStream(seed)
    return model.factor.lower @ stream.normal(len(X))


def synthetic_gp_objective(kernel: KernelSpec, domain: BoxDomain, anchor_count: int = 50, seed=0):
    """Deterministic function drawn from a GP prior.

    Values are drawn jointly at a Latin hypercube of anchors; the returned
    callable is the simple-Kriging interpolant of those values. It exposes
    ``anchors``, ``anchor_values`` and ``model`` attributes.
    """
    if anchor_count < 10:
        raise ValueError("anchor_count must be at least 10")
    stream = seed if isinstance(seed, RandomStream) else RandomStream(seed)
    anchors = lhs(anchor_count, domain, stream.split(0)).points
    values = sample_prior(kernel, anchors, stream.split(1), domain)
    model = fit(TrainingSet(anchors, values), kernel, known_mean=0.0, domain=domain)

    def objective(x):
        x = np.asarray(x, dtype=float)
        mean, _ = model.predict_unit(model.to_unit(x))
        return float(mean[0]) if x.ndim == 1 else mean

    objective.anchors = anchors
    objective.anchor_values = values
    objective.model = model
    return objective
