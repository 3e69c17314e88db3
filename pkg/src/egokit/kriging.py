"""Kriging (Gaussian-process) surrogate: fit, predict, likelihood, LOO, posterior draws.

All kernel lengthscales live in normalized input units: inputs are mapped to
the unit cube with the campaign domain, or with the bounding box of the
training inputs when no domain is given.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial.distance import cdist, pdist

from .design import BoxDomain, lhs_unit
from .errors import DegenerateDesign, DimensionMismatch, DuplicatePoints, NotPositiveDefinite
from .kernel import FAMILIES, THETA_BOUNDS, KernelSpec, correlation_matrix
from .numerics import CholeskyFactor, RandomStream, cholesky, solve_with_factor
from .optim import nelder_mead_multistart

logger = logging.getLogger(__name__)

NUGGET_START = 1e-8
NUGGET_MAX = 1e-4
DUPLICATE_TOL = 1e-12


@dataclass(frozen=True)
class TrainingSet:
    X: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        X = np.atleast_2d(np.asarray(self.X, dtype=float))
        y = np.asarray(self.y, dtype=float).ravel()
        if X.shape[0] != y.shape[0]:
            raise DimensionMismatch(f"{X.shape[0]} inputs but {y.shape[0]} observations")
        if not (np.all(np.isfinite(X)) and np.all(np.isfinite(y))):
            raise DegenerateDesign("training data contain non-finite values")
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "y", y)

    def __len__(self) -> int:
        return self.y.shape[0]

    @property
    def dim(self) -> int:
        return self.X.shape[1]

    def without(self, i: int) -> "TrainingSet":
        keep = np.arange(len(self)) != i
        return TrainingSet(self.X[keep], self.y[keep])

    def append(self, X, y) -> "TrainingSet":
        return TrainingSet(np.vstack([self.X, np.atleast_2d(X)]), np.concatenate([self.y, np.atleast_1d(y)]))


@dataclass(frozen=True)
class PredictiveDistribution:
    mean: np.ndarray | float
    variance: np.ndarray | float

    @property
    def sd(self):
        return np.sqrt(self.variance)


@dataclass(frozen=True)
class LooVectors:
    loo_mean: np.ndarray
    loo_sd: np.ndarray


@dataclass(frozen=True)
class GpModel:
    """A fitted Kriging model. Immutable; build with :func:`fit`."""

    training: TrainingSet
    spec: KernelSpec
    trend_mean: float
    known_mean: bool
    nugget: float
    factor: CholeskyFactor
    weights: np.ndarray
    domain: BoxDomain
    unit_X: np.ndarray = field(repr=False)

    @property
    def dim(self) -> int:
        return self.training.dim

    @property
    def sigma2(self) -> float:
        return self.spec.process_variance

    def to_unit(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        if X.ndim == 1:
            X = X[None, :]
        if X.ndim != 2 or X.shape[1] != self.dim:
            raise DimensionMismatch(f"points of shape {X.shape} for a {self.dim}-d model")
        return self.domain.to_unit(X)

    def coincident(self, U: np.ndarray) -> np.ndarray:
        """Boolean (N, m) mask of training points coinciding with rows of ``U``."""
        return cdist(self.unit_X, U) < DUPLICATE_TOL

    def cross_cov(self, U: np.ndarray, hit: np.ndarray | None = None) -> np.ndarray:
        """Covariances between training points and unit-cube points ``U``, shape (N, m).

        The nugget acts as a covariance term at coincident locations, so the
        model reproduces the data exactly.
        """
        r = correlation_matrix(self.spec.family, self.spec.theta, self.unit_X, U)
        if hit is None:
            hit = self.coincident(U)
        return self.sigma2 * (r + self.nugget * hit)

    def predict_unit(self, U: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Mean and variance at unit-cube points (no validation; hot path)."""
        hit = self.coincident(U)
        r = self.cross_cov(U, hit)
        mean = self.trend_mean + r.T @ self.weights
        v = self.factor.solve_lower(r)
        var = self.sigma2 * (1.0 + self.nugget) - np.einsum("ij,ij->j", v, v)
        if hit.any():
            rows, cols = np.nonzero(hit)
            mean[cols] = self.training.y[rows]
            var[cols] = 0.0
        return mean, np.maximum(var, 0.0)


def _check_duplicates(U: np.ndarray) -> None:
    if len(U) > 1 and pdist(U).min() < DUPLICATE_TOL:
        raise DuplicatePoints("two training points coincide in normalized coordinates")


def _resolve_domain(X: np.ndarray, domain: BoxDomain | None) -> BoxDomain:
    if domain is not None:
        if domain.dim != X.shape[1]:
            raise DimensionMismatch(f"domain is {domain.dim}-d but inputs are {X.shape[1]}-d")
        return domain
    lo, hi = X.min(axis=0), X.max(axis=0)
    hi = np.where(hi > lo, hi, lo + 1.0)
    return BoxDomain(tuple(lo), tuple(hi))


def _factorize(R: np.ndarray, nugget: float | None) -> tuple[CholeskyFactor, float]:
    """Cholesky of ``R + nugget I`` with the escalation policy (1e-8 up to 1e-4, x10)."""
    candidates = [nugget] if nugget is not None else []
    if nugget is None:
        nu = NUGGET_START
        while nu <= NUGGET_MAX * (1 + 1e-9):
            candidates.append(nu)
            nu *= 10.0
    n = R.shape[0]
    for nu in candidates:
        try:
            return cholesky(R + nu * np.eye(n)), nu
        except NotPositiveDefinite:
            continue
    raise DegenerateDesign(f"covariance matrix not factorizable with nugget up to {candidates[-1]:g}")


def _gls_mean(factor: CholeskyFactor, y: np.ndarray) -> float:
    a = factor.solve_lower(np.ones_like(y))
    b = factor.solve_lower(y)
    return float(a @ b / (a @ a))


def fit(
    training: TrainingSet,
    spec: KernelSpec,
    known_mean: float | None = None,
    domain: BoxDomain | None = None,
    nugget: float | None = None,
) -> GpModel:
    """Condition the Gaussian process on the training data.

    ``known_mean=None`` estimates a constant trend by generalized least
    squares (ordinary Kriging); a number fixes the trend (simple Kriging).
    ``nugget`` pins the relative jitter; by default it is escalated from 1e-8.
    """
    n = len(training)
    if spec.dim != training.dim:
        raise DimensionMismatch(f"kernel is {spec.dim}-d but inputs are {training.dim}-d")
    if n < 1 or (known_mean is None and n < 2):
        raise DegenerateDesign(f"{n} observation(s) cannot support trend estimation; need at least 2")
    domain = _resolve_domain(training.X, domain)
    U = domain.to_unit(training.X)
    _check_duplicates(U)
    Rc = correlation_matrix(spec.family, spec.theta, U, U)
    Rc = 0.5 * (Rc + Rc.T)
    np.fill_diagonal(Rc, 1.0)
    corr_factor, nu = _factorize(Rc, nugget)
    factor = CholeskyFactor(np.sqrt(spec.process_variance) * corr_factor.lower)
    y = training.y
    mu = float(known_mean) if known_mean is not None else _gls_mean(factor, y)
    weights = solve_with_factor(factor, y - mu)
    return GpModel(training, spec, mu, known_mean is not None, nu, factor, weights, domain, U)


def refit(model: GpModel, training: TrainingSet) -> GpModel:
    """Refit on new data keeping kernel parameters, trend mode and domain."""
    return fit(training, model.spec, model.trend_mean if model.known_mean else None, model.domain)


def predict(model: GpModel, x0) -> PredictiveDistribution:
    """Kriging mean and variance at one point (scalars) or many points (arrays)."""
    single = np.ndim(x0) == 1
    mean, var = model.predict_unit(model.to_unit(x0))
    if single:
        return PredictiveDistribution(float(mean[0]), float(var[0]))
    return PredictiveDistribution(mean, var)


# ---------------------------------------------------------------- likelihood


def _profiled_nll(R: np.ndarray, y: np.ndarray, known_mean: float | None, nugget=None):
    factor, nu = _factorize(R, nugget)
    mu = known_mean if known_mean is not None else _gls_mean(factor, y)
    z = factor.solve_lower(y - mu)
    n = y.shape[0]
    sigma2 = float(z @ z) / n
    scale = max(np.max(np.abs(y)), np.finfo(float).tiny)
    if not sigma2 > (1e-12 * scale) ** 2:
        raise DegenerateDesign("profiled process variance is zero (constant observations)")
    nll = 0.5 * n * (np.log(2.0 * np.pi * sigma2) + 1.0) + 0.5 * factor.logdet()
    return nll, sigma2, nu


def neg_log_likelihood(
    training: TrainingSet,
    spec: KernelSpec,
    known_mean: float | None = None,
    domain: BoxDomain | None = None,
) -> float:
    """Negative log-likelihood with trend and process variance profiled out.

    Only ``spec.family`` and ``spec.lengthscales`` matter; the variance is
    replaced by its closed-form maximizer.
    """
    if spec.dim != training.dim:
        raise DimensionMismatch(f"kernel is {spec.dim}-d but inputs are {training.dim}-d")
    if known_mean is None and len(training) < 2:
        raise DegenerateDesign("need at least 2 observations to estimate the trend")
    U = _resolve_domain(training.X, domain).to_unit(training.X)
    _check_duplicates(U)
    R = correlation_matrix(spec.family, spec.theta, U, U)
    R = 0.5 * (R + R.T)
    np.fill_diagonal(R, 1.0)
    return float(_profiled_nll(R, training.y, known_mean)[0])


@dataclass(frozen=True)
class MleResult:
    spec: KernelSpec
    nll: float
    starts: np.ndarray
    start_nll: np.ndarray


def mle_search(
    training: TrainingSet,
    family: str = "matern52",
    known_mean: float | None = None,
    seed=0,
    domain: BoxDomain | None = None,
    n_starts: int = 10,
    evals_per_dim: int = 200,
    extra_starts=None,
) -> MleResult:
    """Multistart Nelder-Mead over log-lengthscales; see :func:`estimate_params`."""
    if family not in FAMILIES:
        raise ValueError(f"unknown kernel family {family!r}")
    n, d = training.X.shape
    if n < max(10, d + 2):
        raise DegenerateDesign(f"{n} points are too few to estimate {d} lengthscales (need {max(10, d + 2)})")
    U = _resolve_domain(training.X, domain).to_unit(training.X)
    _check_duplicates(U)
    y = training.y
    if np.ptp(y) == 0.0:
        raise DegenerateDesign("constant observations: profiled process variance is zero")
    # correlations are symmetric: work on the strict upper triangle only
    iu, ju = np.triu_indices(n, 1)
    absdiff = np.abs(U[iu] - U[ju]).T  # (d, pairs)
    upper, lower = iu * n + ju, ju * n + iu
    diag = np.arange(n) * (n + 1)
    lo, hi = np.log(THETA_BOUNDS[0]), np.log(THETA_BOUNDS[1])

    def corr_stack(log_theta: np.ndarray) -> np.ndarray:
        scale = np.exp(-log_theta)  # (k, d) inverse lengthscales
        k = scale.shape[0]
        acc = np.zeros((k, len(iu)))
        if family == "matern52":
            poly = np.ones_like(acc)
            for j in range(d):
                s = np.outer(np.sqrt(5.0) * scale[:, j], absdiff[j])
                poly *= 1.0 + s * (1.0 + s / 3.0)
                acc += s
            vals = poly * np.exp(-acc)
        else:
            for j in range(d):
                h = np.outer(scale[:, j], absdiff[j])
                acc += 0.5 * h * h if family == "gaussian" else h
            vals = np.exp(-acc)
        R = np.empty((k, n * n))
        R[:, upper] = vals
        R[:, lower] = vals
        R[:, diag] = 1.0
        return R.reshape(k, n, n)

    rhs = np.column_stack([np.ones(n), y])
    floor = (1e-12 * max(np.max(np.abs(y)), np.finfo(float).tiny)) ** 2

    def batched_nll(R: np.ndarray) -> np.ndarray:
        # fast path at the starting nugget; raises LinAlgError if any item fails
        L = np.linalg.cholesky(R + NUGGET_START * np.eye(n))
        Z = np.linalg.solve(L, np.broadcast_to(rhs, (len(L), n, 2)))
        a, b = Z[:, :, 0], Z[:, :, 1]
        mu = np.full(len(L), known_mean) if known_mean is not None else np.einsum("ki,ki->k", a, b) / np.einsum("ki,ki->k", a, a)
        resid = b - mu[:, None] * a
        sigma2 = np.einsum("ki,ki->k", resid, resid) / n
        logdet = 2.0 * np.log(np.diagonal(L, axis1=1, axis2=2)).sum(axis=1)
        with np.errstate(divide="ignore"):
            nll = 0.5 * n * (np.log(2.0 * np.pi * sigma2) + 1.0) + 0.5 * logdet
        return np.where(sigma2 > floor, nll, np.inf)

    def objective(log_theta: np.ndarray) -> np.ndarray:
        R = corr_stack(np.atleast_2d(log_theta))
        try:
            return batched_nll(R)
        except np.linalg.LinAlgError:
            pass
        out = np.empty(R.shape[0])
        for i in range(R.shape[0]):
            try:
                out[i] = _profiled_nll(R[i], y, known_mean)[0]
            except DegenerateDesign:
                out[i] = np.inf
        return out

    stream = seed if isinstance(seed, RandomStream) else RandomStream(seed)
    starts = lo + (hi - lo) * lhs_unit(n_starts, d, stream)
    if extra_starts is not None:
        starts = np.vstack([starts, np.clip(np.log(np.atleast_2d(extra_starts)), lo, hi)])
    res = nelder_mead_multistart(
        objective, starts, lo, hi, max_evals=evals_per_dim * d, step=0.1, xatol=1e-3, fatol=1e-6
    )
    best = res.best
    best_x, best_f = res.x[best], res.fun[best]
    if not np.isfinite(best_f):
        raise DegenerateDesign("likelihood is not finite at any start point")
    _, sigma2, _ = _profiled_nll(corr_stack(best_x[None, :])[0], y, known_mean)
    spec = KernelSpec(family, tuple(np.exp(best_x)), sigma2)
    logger.debug("MLE: theta=%s sigma2=%.4g nll=%.6g", spec.lengthscales, sigma2, best_f)
    return MleResult(spec, float(best_f), np.exp(starts), res.f0)


def estimate_params(
    training: TrainingSet,
    family: str = "matern52",
    known_mean: float | None = None,
    seed=0,
    domain: BoxDomain | None = None,
    **kwargs,
) -> KernelSpec:
    """Maximum-likelihood kernel parameters.

    Lengthscales are searched in log space within :data:`THETA_BOUNDS` by
    Nelder-Mead started from a Latin hypercube of ``n_starts`` points; the
    trend and process variance are profiled analytically. Deterministic for
    a given seed.
    """
    return mle_search(training, family, known_mean, seed, domain, **kwargs).spec


def fit_mle(training: TrainingSet, family: str = "matern52", known_mean=None, seed=0, domain=None, **kwargs) -> GpModel:
    spec = estimate_params(training, family, known_mean, seed, domain, **kwargs)
    return fit(training, spec, known_mean, domain)


# ------------------------------------------------------ cross-validation etc.


def loo(model: GpModel) -> LooVectors:
    """Leave-one-out means and standard deviations, hyperparameters fixed.

    Uses the virtual cross-validation identities on the inverse covariance.
    With an estimated trend the bordered (trend-augmented) inverse gives the
    mean, so the trend is re-estimated without the held-out point.
    """
    n = len(model.training)
    Q = solve_with_factor(model.factor, np.eye(n))
    Q = 0.5 * (Q + Q.T)
    y = model.training.y
    if model.known_mean:
        P = Q
        resid = P @ (y - model.trend_mean)
    else:
        q1 = Q.sum(axis=1)
        P = Q - np.outer(q1, q1) / q1.sum()
        resid = P @ y
    loo_mean = y - resid / np.diag(P)
    return LooVectors(loo_mean, np.sqrt(1.0 / np.diag(Q)))


def posterior_cov(model: GpModel, Xnew) -> np.ndarray:
    """Joint posterior covariance at new points."""
    U = model.to_unit(Xnew)
    v = model.factor.solve_lower(model.cross_cov(U))
    same = cdist(U, U) < DUPLICATE_TOL
    K = model.sigma2 * (correlation_matrix(model.spec.family, model.spec.theta, U, U) + model.nugget * same)
    C = K - v.T @ v
    C = 0.5 * (C + C.T)
    # exact zeros for points that coincide with data
    known = model.coincident(U).any(axis=0)
    C[known, :] = 0.0
    C[:, known] = 0.0
    np.fill_diagonal(C, np.maximum(np.diag(C), 0.0))
    return C


def _sampling_factor(C: np.ndarray, sigma2: float) -> np.ndarray:
    m = C.shape[0]
    jitter = 1e-12 * sigma2
    while jitter <= 1e-6 * sigma2 * (1 + 1e-9):
        try:
            return cholesky(C + jitter * np.eye(m)).lower
        except NotPositiveDefinite:
            jitter *= 10.0
    raise DegenerateDesign("posterior covariance not factorizable even with jitter")


def posterior_sample(model: GpModel, Xnew, draws: int, seed=0) -> np.ndarray:
    """``draws`` joint samples at ``Xnew``, shape (draws, m)."""
    if draws < 1:
        raise ValueError("draws must be at least 1")
    Xnew = np.atleast_2d(np.asarray(Xnew, dtype=float))
    U = model.to_unit(Xnew)
    mean, _ = model.predict_unit(U)
    C = posterior_cov(model, Xnew)
    stream = seed if isinstance(seed, RandomStream) else RandomStream(seed)
    z = stream.normal((draws, Xnew.shape[0]))
    # observed locations are reproduced exactly; only the rest get jittered noise
    free = ~model.coincident(U).any(axis=0)
    out = np.repeat(mean[None, :], draws, axis=0)
    if free.any():
        L = _sampling_factor(C[np.ix_(free, free)], model.sigma2)
        out[:, free] += z[:, free] @ L.T
    return out


# ------------------------------------------------------------- persistence


def model_to_dict(model: GpModel, training_csv: str | None = None) -> dict:
    return {
        "family": model.spec.family,
        "lengthscales": list(model.spec.lengthscales),
        "process_variance": model.spec.process_variance,
        "trend_mean": model.trend_mean,
        "known_mean": model.known_mean,
        "nugget": model.nugget,
        "domain": {"lower": list(model.domain.lower), "upper": list(model.domain.upper)},
        "training_csv": training_csv,
    }


def model_from_dict(data: dict, training: TrainingSet) -> GpModel:
    spec = KernelSpec(data["family"], tuple(data["lengthscales"]), data["process_variance"])
    domain = BoxDomain(tuple(data["domain"]["lower"]), tuple(data["domain"]["upper"]))
    known = data["trend_mean"] if data["known_mean"] else None
    return fit(training, spec, known, domain, nugget=data["nugget"])
