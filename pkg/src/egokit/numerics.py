"""Dense linear algebra, scalar Gaussian functions and seeded random streams."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_triangular
from scipy.special import erfc, ndtri

from .errors import DimensionMismatch, NotPositiveDefinite

_INV_SQRT_2PI = 0.3989422804014327
_SQRT_HALF = 0.7071067811865476


@dataclass(frozen=True)
class CholeskyFactor:
    """Lower-triangular ``L`` with ``L @ L.T`` equal to the source matrix."""

    lower: np.ndarray

    @property
    def order(self) -> int:
        return self.lower.shape[0]

    def logdet(self) -> float:
        """Log-determinant of the factorized matrix."""
        return 2.0 * float(np.sum(np.log(np.diag(self.lower))))

    def solve_lower(self, rhs: np.ndarray) -> np.ndarray:
        """Return ``L^{-1} rhs`` (rhs may be a vector or a matrix of columns)."""
        return solve_triangular(self.lower, rhs, lower=True, check_finite=False)


def cholesky(a) -> CholeskyFactor:
    """Factorize a symmetric positive-definite matrix.

    Raises
    ------
    NotPositiveDefinite
        If any pivot is not strictly positive. Callers escalate their nugget
        on this signal.
    """
    a = np.asarray(a, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] < 1:
        raise DimensionMismatch(f"expected a non-empty square matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise NotPositiveDefinite("matrix has non-finite entries")
    try:
        lower = np.linalg.cholesky(a)
    except np.linalg.LinAlgError as exc:
        raise NotPositiveDefinite(str(exc)) from None
    if not np.all(np.diag(lower) > 0.0):
        raise NotPositiveDefinite("non-positive pivot")
    return CholeskyFactor(lower)


def solve_with_factor(factor: CholeskyFactor, rhs) -> np.ndarray:
    """Solve ``(L L^T) v = rhs`` by two triangular substitutions."""
    rhs = np.asarray(rhs, dtype=float)
    if rhs.shape[0] != factor.order:
        raise DimensionMismatch(
            f"right-hand side has length {rhs.shape[0]}, factor has order {factor.order}"
        )
    tmp = solve_triangular(factor.lower, rhs, lower=True, check_finite=False)
    return solve_triangular(factor.lower, tmp, lower=True, trans="T", check_finite=False)


def std_normal_pdf(z):
    """Standard Gaussian density; works elementwise on arrays."""
    z = np.asarray(z, dtype=float)
    out = _INV_SQRT_2PI * np.exp(-0.5 * z * z)
    return float(out) if out.ndim == 0 else out


def std_normal_cdf(z):
    """Standard Gaussian distribution function via ``erfc``.

    ``Phi(z) = erfc(-z / sqrt(2)) / 2`` keeps full relative accuracy in the
    lower tail, which the closed-form expected improvement relies on.
    """
    z = np.asarray(z, dtype=float)
    out = 0.5 * erfc(-z * _SQRT_HALF)
    return float(out) if out.ndim == 0 else out


class RandomStream:
    """Deterministic, splittable stream of uniforms and standard normals.

    Backed by PCG64 seeded through :class:`numpy.random.SeedSequence`.
    Normals are produced by the inverse Gaussian CDF applied to open-interval
    uniforms, so the transform is fixed and platform independent.
    """

    def __init__(self, seed: int = 0, _key: tuple[int, ...] = ()):
        self.seed = int(seed)
        self.key = tuple(_key)
        seq = np.random.SeedSequence(self.seed, spawn_key=self.key)
        self._gen = np.random.Generator(np.random.PCG64(seq))

    def split(self, k: int) -> "RandomStream":
        """Child stream number ``k``; independent of the parent's draws so far."""
        return RandomStream(self.seed, self.key + (int(k),))

    def uniform(self, size=None) -> np.ndarray:
        """Uniform variates in ``[0, 1)``."""
        return self._gen.random(size)

    def open_uniform(self, size=None) -> np.ndarray:
        """Uniform variates strictly inside ``(0, 1)``."""
        bits = self._gen.integers(0, 1 << 53, size=size, dtype=np.int64)
        return (bits + 0.5) * (1.0 / (1 << 53))

    def normal(self, size=None) -> np.ndarray:
        return ndtri(self.open_uniform(size))

    def permutation(self, n: int) -> np.ndarray:
        return self._gen.permutation(n)

    def integers(self, low: int, high: int, size=None) -> np.ndarray:
        return self._gen.integers(low, high, size=size)


def seeded_stream(seed: int) -> RandomStream:
    return RandomStream(seed)
