"""Box domains and Latin hypercube designs."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import pdist

from .errors import DimensionMismatch, InvalidConfig
from .numerics import RandomStream


@dataclass(frozen=True)
class BoxDomain:
    lower: tuple
    upper: tuple

    def __post_init__(self):
        lo = tuple(float(v) for v in np.atleast_1d(self.lower))
        hi = tuple(float(v) for v in np.atleast_1d(self.upper))
        if len(lo) == 0 or len(lo) != len(hi):
            raise InvalidConfig(f"bounds must be non-empty and of equal length, got {lo} and {hi}")
        if not all(np.isfinite(a) and np.isfinite(b) and a < b for a, b in zip(lo, hi)):
            raise InvalidConfig(f"every lower bound must be below its upper bound: {lo} vs {hi}")
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)

    @classmethod
    def unit(cls, d: int) -> "BoxDomain":
        return cls((0.0,) * d, (1.0,) * d)

    @property
    def dim(self) -> int:
        return len(self.lower)

    @property
    def lo(self) -> np.ndarray:
        return np.asarray(self.lower)

    @property
    def width(self) -> np.ndarray:
        return np.asarray(self.upper) - np.asarray(self.lower)

    def to_unit(self, X) -> np.ndarray:
        return (np.asarray(X, dtype=float) - self.lo) / self.width

    def from_unit(self, U) -> np.ndarray:
        return self.lo + np.asarray(U, dtype=float) * self.width

    def contains(self, X) -> bool:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        return bool(np.all(X >= self.lo) and np.all(X <= np.asarray(self.upper)))

    def clip(self, X) -> np.ndarray:
        return np.clip(X, self.lo, np.asarray(self.upper))


@dataclass(frozen=True)
class DesignMatrix:
    points: np.ndarray
    domain: BoxDomain

    def __post_init__(self):
        pts = np.atleast_2d(np.asarray(self.points, dtype=float))
        if pts.shape[0] < 1 or pts.shape[1] != self.domain.dim:
            raise DimensionMismatch(f"design of shape {pts.shape} does not fit a {self.domain.dim}-d domain")
        object.__setattr__(self, "points", pts)

    def __len__(self) -> int:
        return self.points.shape[0]

    def strata(self) -> np.ndarray:
        """Stratum index of every coordinate, shape (n, d)."""
        n = len(self)
        idx = np.floor(self.domain.to_unit(self.points) * n).astype(int)
        return np.clip(idx, 0, n - 1)


def _as_stream(seed) -> RandomStream:
    return seed if isinstance(seed, RandomStream) else RandomStream(seed)


def lhs_unit(n: int, d: int, stream: RandomStream) -> np.ndarray:
    """Latin hypercube in the open unit cube: one point per stratum [i/n, (i+1)/n)."""
    perms = np.column_stack([stream.permutation(n) for _ in range(d)])
    return (perms + stream.open_uniform((n, d))) / n


def lhs(n: int, domain: BoxDomain, seed=0) -> DesignMatrix:
    if n < 1:
        raise InvalidConfig(f"design size must be positive, got {n}")
    return DesignMatrix(domain.from_unit(lhs_unit(n, domain.dim, _as_stream(seed))), domain)


def _phi(dist: np.ndarray, p: float = 50.0) -> float:
    # Morris-Mitchell criterion scaled by the minimum distance to avoid overflow
    dmin = dist.min()
    return float(np.log(np.sum((dmin / dist) ** p)) / p - np.log(dmin))


def maximin_improve(design: DesignMatrix, iterations: int, seed=0) -> DesignMatrix:
    """Greedy column-swap improvement of a Latin hypercube.

    Each trial swaps two rows' coordinates within one column, always involving
    a point of the currently closest pair. A swap is kept only if it does not
    shrink the minimum pairwise distance and strictly lowers the Morris-Mitchell
    ``phi_p`` criterion. Stratification is preserved by construction.
    """
    n = len(design)
    if iterations <= 0 or n < 3:
        return design
    stream = _as_stream(seed)
    P = design.points.copy()
    U = design.domain.to_unit(P)
    d = U.shape[1]
    dist = pdist(U)
    best_min, best_phi = dist.min(), _phi(dist)
    rows, cols = np.triu_indices(n, k=1)
    for _ in range(iterations):
        k = int(np.argmin(dist))
        i = int(rows[k] if stream.uniform() < 0.5 else cols[k])
        other = int(stream.integers(0, n - 1))
        other += other >= i
        j = int(stream.integers(0, d))
        U[[i, other], j] = U[[other, i], j]
        trial = pdist(U)
        tmin, tphi = trial.min(), _phi(trial)
        if tmin >= best_min and tphi < best_phi:
            dist, best_min, best_phi = trial, tmin, tphi
            P[[i, other], j] = P[[other, i], j]
        else:
            U[[i, other], j] = U[[other, i], j]
    return DesignMatrix(P, design.domain)


def min_distance(points, domain: BoxDomain | None = None) -> float:
    U = np.asarray(points, dtype=float)
    if domain is not None:
        U = domain.to_unit(U)
    return float(pdist(U).min()) if len(U) > 1 else np.inf
