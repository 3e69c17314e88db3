"""Separable stationary covariance kernels.

The covariance between two points is ``sigma2 * prod_j rho(|x_j - y_j|, theta_j)``
where ``rho`` is a one-dimensional correlation (Matern 5/2 by default).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, InvalidParameter

FAMILIES = ("matern52", "gaussian", "exponential")

#: Bounds for correlation lengths, in units of the (normalized) input range.
THETA_BOUNDS = (1e-3, 10.0)

_SQRT5 = np.sqrt(5.0)


@dataclass(frozen=True)
class KernelSpec:
    family: str
    lengthscales: tuple
    process_variance: float = 1.0

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise InvalidParameter(f"unknown kernel family {self.family!r}; expected one of {FAMILIES}")
        theta = tuple(float(t) for t in np.atleast_1d(self.lengthscales))
        object.__setattr__(self, "lengthscales", theta)
        if len(theta) == 0 or not all(np.isfinite(t) and t > 0 for t in theta):
            raise InvalidParameter(f"lengthscales must be positive, got {theta}")
        if not (np.isfinite(self.process_variance) and self.process_variance > 0):
            raise InvalidParameter(f"process variance must be positive, got {self.process_variance}")
        object.__setattr__(self, "process_variance", float(self.process_variance))

    @property
    def dim(self) -> int:
        return len(self.lengthscales)

    @property
    def theta(self) -> np.ndarray:
        return np.asarray(self.lengthscales)

    def with_params(self, lengthscales=None, process_variance=None) -> "KernelSpec":
        return KernelSpec(
            self.family,
            self.lengthscales if lengthscales is None else tuple(lengthscales),
            self.process_variance if process_variance is None else process_variance,
        )


def _rho(family: str, h: np.ndarray) -> np.ndarray:
    # h = distance / theta, elementwise
    if family == "matern52":
        s = _SQRT5 * h
        return (1.0 + s + s * s / 3.0) * np.exp(-s)
    if family == "gaussian":
        return np.exp(-0.5 * h * h)
    return np.exp(-h)


def correlation_1d(family: str, distance, theta: float):
    """One-dimensional correlation at a (nonnegative) distance."""
    if family not in FAMILIES:
        raise InvalidParameter(f"unknown kernel family {family!r}")
    if not theta > 0:
        raise InvalidParameter(f"theta must be positive, got {theta}")
    d = np.asarray(distance, dtype=float)
    if np.any(d < 0) or not np.all(np.isfinite(d)):
        raise InvalidParameter("distance must be finite and nonnegative")
    out = _rho(family, d / theta)
    return float(out) if out.ndim == 0 else out


def correlation_matrix(family: str, theta, A: np.ndarray, B: np.ndarray) -> np.ndarray:
    """Unit-variance correlations between rows of ``A`` (n, d) and ``B`` (m, d)."""
    theta = np.broadcast_to(np.asarray(theta, dtype=float), A.shape[1:])
    # one pass per dimension keeps every temporary at (n, m)
    acc = np.zeros((A.shape[0], B.shape[0]))
    poly = np.ones_like(acc) if family == "matern52" else None
    for j in range(A.shape[1]):
        h = np.abs(A[:, j, None] - B[None, :, j]) / theta[j]
        if family == "matern52":
            s = _SQRT5 * h
            poly *= 1.0 + s + s * s / 3.0
            acc += s
        elif family == "gaussian":
            acc += 0.5 * h * h
        else:
            acc += h
    out = np.exp(-acc)
    return out * poly if poly is not None else out


def _as_points(spec: KernelSpec, X, name="X") -> np.ndarray:
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[None, :]
    if X.ndim != 2 or X.shape[1] != spec.dim:
        raise DimensionMismatch(f"{name} has shape {X.shape}; kernel dimension is {spec.dim}")
    return X


def covariance(spec: KernelSpec, x, y) -> float:
    x = _as_points(spec, x, "x")
    y = _as_points(spec, y, "y")
    if x.shape[0] != 1 or y.shape[0] != 1:
        raise DimensionMismatch("covariance takes two single points")
    return float(spec.process_variance * correlation_matrix(spec.family, spec.theta, x, y)[0, 0])


def covariance_matrix(spec: KernelSpec, X) -> np.ndarray:
    X = _as_points(spec, X)
    K = spec.process_variance * correlation_matrix(spec.family, spec.theta, X, X)
    # exact symmetry and diagonal, independent of rounding in the product
    K = 0.5 * (K + K.T)
    np.fill_diagonal(K, spec.process_variance)
    return K


def covariance_vector(spec: KernelSpec, X, x0) -> np.ndarray:
    X = _as_points(spec, X)
    x0 = _as_points(spec, x0, "x0")
    if x0.shape[0] != 1:
        raise DimensionMismatch("x0 must be a single point")
    return spec.process_variance * correlation_matrix(spec.family, spec.theta, X, x0)[:, 0]
