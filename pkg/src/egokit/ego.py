"""Sequential EGO campaigns as a resumable ask/tell state machine.

A campaign starts with a Latin hypercube design, then alternates between
asking for a batch (fit the GP, maximize EI / build a Constant Liar batch)
and telling the evaluated values, until the evaluation budget is spent.
Values are maximized.
"""

from __future__ import annotations

import logging
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Callable

import numpy as np
from scipy.spatial.distance import cdist

from . import csvio
from .acquisition import BatchProposal, LIARS, maximize_acquisition, propose_batch_cl
from .design import BoxDomain, DesignMatrix, lhs, lhs_unit, maximin_improve
from .errors import BudgetExhausted, DegenerateDesign, InvalidConfig, MismatchedTell, NonFiniteValue
from .kernel import FAMILIES, KernelSpec
from .kriging import GpModel, TrainingSet, fit, mle_search
from .numerics import RandomStream

logger = logging.getLogger(__name__)

PHASES = ("awaiting_initial", "ready", "awaiting_batch", "finished")
TELL_TOLERANCE = 1e-9


@dataclass(frozen=True)
class CampaignConfig:
    budget_total: int
    initial_size: int | None = None
    batch_size: int = 1
    liar: str = "mixed"
    seed: int = 0
    kernel_family: str = "matern52"
    refit_every: int = 1
    n_starts: int = 20
    evals_per_dim: int = 200
    mle_starts: int = 10
    qei_draws: int = 10_000
    maximin_iterations: int = 0

    def __post_init__(self):
        if self.initial_size is None:
            object.__setattr__(self, "initial_size", self.budget_total // 2)
        if self.budget_total < 1:
            raise InvalidConfig("budget_total must be positive")
        if not 1 <= self.initial_size < self.budget_total:
            raise InvalidConfig(
                f"initial design size {self.initial_size} must be at least 1 and below the budget {self.budget_total}"
            )
        if self.batch_size < 1:
            raise InvalidConfig("batch_size must be positive")
        if self.liar not in LIARS:
            raise InvalidConfig(f"liar must be one of {LIARS}, got {self.liar!r}")
        if self.kernel_family not in FAMILIES:
            raise InvalidConfig(f"kernel_family must be one of {FAMILIES}, got {self.kernel_family!r}")
        for name in ("refit_every", "n_starts", "evals_per_dim", "mle_starts"):
            if getattr(self, name) < 1:
                raise InvalidConfig(f"{name} must be positive")
        if self.qei_draws < 100:
            raise InvalidConfig("qei_draws must be at least 100")

    @classmethod
    def from_dict(cls, data: dict) -> "CampaignConfig":
        known = {k: data[k] for k in cls.__dataclass_fields__ if k in data and data[k] is not None}
        try:
            return cls(**known)
        except TypeError as exc:
            raise InvalidConfig(str(exc)) from None


@dataclass(frozen=True)
class Pending:
    points: np.ndarray
    ei: np.ndarray
    strategy: str
    mc_qei: float | None = None


@dataclass(frozen=True)
class OptimizationState:
    domain: BoxDomain
    config: CampaignConfig
    X: np.ndarray
    y: np.ndarray
    ei: np.ndarray  # EI at proposal time; nan for design points
    phase: str
    pending: Pending | None = None
    asks: int = 0
    kernel: KernelSpec | None = None
    kernel_age: int = 0

    @property
    def n_evaluated(self) -> int:
        return len(self.y)

    @property
    def remaining(self) -> int:
        return self.config.budget_total - self.n_evaluated

    def incumbent(self) -> tuple[np.ndarray, float]:
        """Best point and value so far; first occurrence wins ties."""
        if self.n_evaluated == 0:
            raise MismatchedTell("no evaluations yet")
        i = int(np.argmax(self.y))
        return self.X[i], float(self.y[i])


@dataclass(frozen=True)
class CampaignResult:
    best_point: np.ndarray
    best_value: float
    X: np.ndarray
    y: np.ndarray
    ei: np.ndarray
    incumbent_trace: np.ndarray = field(repr=False)


def start(domain: BoxDomain, config: CampaignConfig) -> tuple[OptimizationState, DesignMatrix]:
    """Draw the initial Latin hypercube; the state waits for its values."""
    stream = RandomStream(config.seed).split(0)
    design = lhs(config.initial_size, domain, stream.split(0))
    if config.maximin_iterations > 0:
        design = maximin_improve(design, config.maximin_iterations, stream.split(1))
    pending = Pending(design.points, np.full(len(design), np.nan), "initial")
    d = domain.dim
    state = OptimizationState(domain, config, np.empty((0, d)), np.empty(0), np.empty(0), "awaiting_initial", pending)
    return state, design


def _match(pending: np.ndarray, points: np.ndarray, domain: BoxDomain) -> np.ndarray:
    """Permutation taking told rows onto pending rows, or raise."""
    if points.shape != pending.shape:
        raise MismatchedTell(f"expected {len(pending)} point(s) of dimension {pending.shape[1]}, got shape {points.shape}")
    dist = cdist(domain.to_unit(pending), domain.to_unit(points), metric="chebyshev")
    order = np.full(len(pending), -1)
    used = np.zeros(len(points), dtype=bool)
    for i in range(len(pending)):
        cand = np.flatnonzero((dist[i] <= TELL_TOLERANCE) & ~used)
        if cand.size == 0:
            raise MismatchedTell(f"pending point {i + 1} ({pending[i]}) was not told")
        order[i] = cand[0]
        used[cand[0]] = True
    return order


def tell(state: OptimizationState, points, values) -> OptimizationState:
    """Record values for the outstanding request (initial design or batch)."""
    if state.phase not in ("awaiting_initial", "awaiting_batch") or state.pending is None:
        raise MismatchedTell(f"nothing to tell in phase {state.phase!r}")
    points = np.atleast_2d(np.asarray(points, dtype=float))
    values = np.asarray(values, dtype=float).ravel()
    if len(values) != len(points):
        raise MismatchedTell(f"{len(points)} point(s) but {len(values)} value(s)")
    if not np.all(np.isfinite(values)):
        raise NonFiniteValue("told values must be finite")
    order = _match(state.pending.points, points, state.domain)
    X = np.vstack([state.X, state.pending.points])
    y = np.concatenate([state.y, values[order]])
    ei = np.concatenate([state.ei, state.pending.ei])
    phase = "finished" if len(y) >= state.config.budget_total else "ready"
    return replace(state, X=X, y=y, ei=ei, phase=phase, pending=None)


def _space_filling(state: OptimizationState, k: int, stream: RandomStream) -> np.ndarray:
    """Greedy maximin picks from a Latin hypercube pool, away from evaluated points."""
    d = state.domain.dim
    pool = lhs_unit(max(100 * d, 10 * k), d, stream)
    known = state.domain.to_unit(state.X)
    dmin = cdist(pool, known).min(axis=1) if len(known) else np.full(len(pool), np.inf)
    chosen = []
    for _ in range(k):
        i = int(np.argmax(dmin))
        chosen.append(pool[i])
        dmin = np.minimum(dmin, np.linalg.norm(pool - pool[i], axis=1))
    return state.domain.from_unit(np.array(chosen))


def current_model(state: OptimizationState, stream: RandomStream | None = None) -> tuple[GpModel, KernelSpec, int]:
    """Fit the campaign GP, re-running MLE when the refit cadence says so."""
    cfg = state.config
    training = TrainingSet(state.X, state.y)
    refresh = state.kernel is None or state.kernel_age + 1 >= cfg.refit_every
    if refresh:
        stream = stream or RandomStream(cfg.seed).split(1).split(state.asks).split(0)
        d = state.domain.dim
        if len(training) >= max(10, d + 2):
            spec = mle_search(
                training, cfg.kernel_family, None, stream, state.domain,
                n_starts=cfg.mle_starts, evals_per_dim=cfg.evals_per_dim,
            ).spec
        else:
            spec = default_spec(training, cfg.kernel_family, state.domain)
        age = 0
    else:
        spec, age = state.kernel, state.kernel_age + 1
    return fit(training, spec, None, state.domain), spec, age


def default_spec(training: TrainingSet, family: str, domain: BoxDomain, theta: float = 0.5) -> KernelSpec:
    """Fixed lengthscales with profiled variance, for designs too small for MLE."""
    spec = KernelSpec(family, (theta,) * domain.dim, 1.0)
    model = fit(training, spec, None, domain)
    z = model.factor.solve_lower(training.y - model.trend_mean)
    sigma2 = float(z @ z) / len(training)
    if not sigma2 > (1e-12 * max(np.abs(training.y).max(), 1e-300)) ** 2:
        raise DegenerateDesign("constant observations")
    return spec.with_params(process_variance=sigma2)


def ask(state: OptimizationState) -> tuple[OptimizationState, BatchProposal]:
    """Propose the next batch; repeated asks return the stored pending batch."""
    if state.phase == "awaiting_batch":
        p = state.pending
        return state, BatchProposal(p.points, p.ei, p.strategy, p.mc_qei)
    if state.phase == "finished" or state.remaining <= 0:
        raise BudgetExhausted("evaluation budget exhausted")
    if state.phase != "ready":
        raise MismatchedTell("the initial design has not been told yet")
    cfg = state.config
    b = min(cfg.batch_size, state.remaining)
    stream = RandomStream(cfg.seed).split(1).split(state.asks)
    _, best = state.incumbent()
    try:
        model, spec, age = current_model(state, stream.split(0))
    except DegenerateDesign as exc:
        logger.info("GP unavailable (%s); proposing space-filling points", exc)
        pts = _space_filling(state, b, stream.split(2))
        proposal = BatchProposal(pts, np.zeros(b), "space_filling")
        spec, age = state.kernel, state.kernel_age
    else:
        if b == 1:
            x, ei = maximize_acquisition(model, best, state.domain, cfg.n_starts, stream.split(1), cfg.evals_per_dim)
            proposal = BatchProposal(x[None, :], np.array([ei]), "single")
        else:
            proposal = propose_batch_cl(
                model, best, state.domain, b, cfg.liar, stream.split(1), cfg.n_starts, cfg.evals_per_dim, cfg.qei_draws
            )
    pending = Pending(proposal.points, np.asarray(proposal.ei_single, dtype=float), proposal.strategy, proposal.mc_qei)
    new_state = replace(state, phase="awaiting_batch", pending=pending, asks=state.asks + 1, kernel=spec, kernel_age=age)
    return new_state, proposal


def _evaluate(objective: Callable, X: np.ndarray) -> np.ndarray:
    return np.array([float(objective(x)) for x in X])


def run_closed_loop(objective: Callable, domain: BoxDomain, config: CampaignConfig, callback=None) -> CampaignResult:
    """Drive start/ask/tell until the budget is spent, maximizing ``objective``."""
    state, design = start(domain, config)
    state = tell(state, design.points, _evaluate(objective, design.points))
    while state.phase != "finished":
        state, proposal = ask(state)
        state = tell(state, proposal.points, _evaluate(objective, proposal.points))
        if callback is not None:
            callback(state)
    return result_of(state)


def result_of(state: OptimizationState) -> CampaignResult:
    x, v = state.incumbent()
    return CampaignResult(x, v, state.X, state.y, state.ei, np.maximum.accumulate(state.y))


# ------------------------------------------------------------------ persistence

STATE_VERSION = 1


def eval_header(d: int) -> list[str]:
    return [f"x{j + 1}" for j in range(d)] + ["y", "ei"]


def write_evaluations(path, state: OptimizationState) -> None:
    rows = np.column_stack([state.X, state.y, state.ei]) if state.n_evaluated else []
    csvio.write_table(path, eval_header(state.domain.dim), rows)


def read_evaluations(path, d: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    header, data = csvio.read_table(path, allow_empty_cells=True)
    if header != eval_header(d):
        raise InvalidConfig(f"{path}: expected header {','.join(eval_header(d))}")
    if np.isnan(data[:, : d + 1]).any():
        raise InvalidConfig(f"{path}: empty coordinate or value cell")
    return data[:, :d], data[:, d], data[:, d + 1]


def state_to_dict(state: OptimizationState, evaluations_csv: str) -> dict:
    p = state.pending
    return {
        "version": STATE_VERSION,
        "domain": {"lower": list(state.domain.lower), "upper": list(state.domain.upper)},
        "config": asdict(state.config),
        "phase": state.phase,
        "asks": state.asks,
        "evaluations_csv": evaluations_csv,
        "n_evaluated": state.n_evaluated,
        "kernel": None
        if state.kernel is None
        else {
            "family": state.kernel.family,
            "lengthscales": list(state.kernel.lengthscales),
            "process_variance": state.kernel.process_variance,
        },
        "kernel_age": state.kernel_age,
        "pending": None
        if p is None
        else {
            "points": p.points.tolist(),
            "ei": [None if np.isnan(e) else float(e) for e in p.ei],
            "strategy": p.strategy,
            "mc_qei": p.mc_qei,
        },
    }


def state_from_dict(data: dict, X, y, ei) -> OptimizationState:
    if data.get("version") != STATE_VERSION:
        raise InvalidConfig(f"unsupported state version {data.get('version')!r}")
    domain = BoxDomain(tuple(data["domain"]["lower"]), tuple(data["domain"]["upper"]))
    config = CampaignConfig.from_dict(data["config"])
    if len(y) != data["n_evaluated"]:
        raise MismatchedTell(f"state records {data['n_evaluated']} evaluations but the CSV holds {len(y)}")
    k = data.get("kernel")
    kernel = None if k is None else KernelSpec(k["family"], tuple(k["lengthscales"]), k["process_variance"])
    p = data.get("pending")
    pending = None
    if p is not None:
        pending = Pending(
            np.array(p["points"], dtype=float).reshape(-1, domain.dim),
            np.array([np.nan if e is None else e for e in p["ei"]], dtype=float),
            p["strategy"],
            p.get("mc_qei"),
        )
    if data["phase"] not in PHASES:
        raise InvalidConfig(f"unknown phase {data['phase']!r}")
    return OptimizationState(
        domain,
        config,
        np.asarray(X, dtype=float).reshape(-1, domain.dim),
        np.asarray(y, dtype=float),
        np.asarray(ei, dtype=float),
        data["phase"],
        pending,
        int(data["asks"]),
        kernel,
        int(data.get("kernel_age", 0)),
    )


def save_state(state: OptimizationState, path, evaluations_csv=None) -> None:
    """Write the evaluations CSV, then the state JSON (each atomically).

    The JSON stores the CSV location relative to its own directory.
    """
    path = Path(path)
    csv_path = Path(evaluations_csv) if evaluations_csv else path.with_suffix(".evaluations.csv")
    write_evaluations(csv_path, state)
    try:
        ref = str(csv_path.resolve().relative_to(path.resolve().parent))
    except ValueError:
        ref = str(csv_path.resolve())
    csvio.write_json(path, state_to_dict(state, ref))


def load_state(path, evaluations_csv=None) -> OptimizationState:
    path = Path(path)
    data = csvio.read_json(path)
    csv_path = Path(evaluations_csv) if evaluations_csv else path.parent / data["evaluations_csv"]
    d = len(data["domain"]["lower"])
    X, y, ei = read_evaluations(csv_path, d)
    n = data.get("n_evaluated")
    if isinstance(n, int) and len(y) > n:
        # a save interrupted between the CSV and the JSON leaves extra rows;
        # evaluations only ever grow, so the recorded prefix is the old state
        logger.warning("%s holds %d rows, state records %d; using the first %d", csv_path, len(y), n, n)
        X, y, ei = X[:n], y[:n], ei[:n]
    return state_from_dict(data, X, y, ei)
