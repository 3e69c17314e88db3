"""Efficiency-versus-flow-rate curves for a fixed geometry."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateAbscissae, InsufficientPoints, NonPhysical


@dataclass(frozen=True)
class FlowCurve:
    """Quadratic ``R(Q) = a Q^2 + b Q + c`` and the data it was fitted on."""

    a: float
    b: float
    c: float
    fitted_points: tuple
    residuals: tuple

    def __call__(self, q):
        return evaluate(self, q)

    @property
    def vertex(self) -> float:
        return -self.b / (2.0 * self.a)


def fit_quadratic(points) -> FlowCurve:
    """Least-squares quadratic through (Q, R) pairs; exact for three points.

    Q is divided by its largest magnitude before solving so that Q^2 of order
    1e7 does not wreck the conditioning.
    """
    pts = np.asarray(points, dtype=float).reshape(-1, 2)
    if len(pts) < 3:
        raise InsufficientPoints(f"a quadratic needs at least 3 points, got {len(pts)}")
    q, r = pts[:, 0], pts[:, 1]
    if len(np.unique(q)) < 3:
        raise DegenerateAbscissae("fewer than 3 distinct flow rates")
    scale = float(np.max(np.abs(q)))
    t = q / scale
    A = np.column_stack([t * t, t, np.ones_like(t)])
    (a_s, b_s, c), *_ = np.linalg.lstsq(A, r, rcond=None)
    a, b = a_s / scale**2, b_s / scale
    resid = r - (A @ np.array([a_s, b_s, c]))
    return FlowCurve(float(a), float(b), float(c), tuple(map(tuple, pts)), tuple(resid.tolist()))


def evaluate(curve: FlowCurve, q):
    q = np.asarray(q, dtype=float)
    out = (curve.a * q + curve.b) * q + curve.c
    return float(out) if out.ndim == 0 else out


def efficiency_from(q: float, dp: float, torque: float, omega: float) -> float:
    """Efficiency ``Q dP / (C Omega)`` with Q in m^3/s, dP in Pa, C in N.m, Omega in rad/s."""
    if not torque > 0 or not omega > 0:
        raise NonPhysical(f"torque and rotational speed must be positive (got {torque}, {omega})")
    if q < 0:
        raise NonPhysical(f"flow rate must be nonnegative (got {q})")
    return q * dp / (torque * omega)


def interpolate_rows(q_columns: np.ndarray, r_columns: np.ndarray, q_target: float, include_origin: bool = True):
    """Fit one curve per row and evaluate it at ``q_target``.

    Returns arrays ``a, b, c, r_target``. With ``include_origin`` the point
    (0, 0) is added to every row before fitting. A row that repeats a flow
    rate is rejected: each column is meant to be a distinct operating point.
    """
    q_columns = np.atleast_2d(np.asarray(q_columns, dtype=float))
    r_columns = np.atleast_2d(np.asarray(r_columns, dtype=float))
    out = np.empty((len(q_columns), 4))
    for i, (qs, rs) in enumerate(zip(q_columns, r_columns)):
        if len(np.unique(qs)) < len(qs):
            raise DegenerateAbscissae(f"row {i + 1}: repeated flow rate in {qs.tolist()}")
        pts = list(zip(qs, rs))
        if include_origin:
            pts = [(0.0, 0.0)] + pts
        try:
            curve = fit_quadratic(pts)
        except (InsufficientPoints, DegenerateAbscissae) as exc:
            raise type(exc)(f"row {i + 1}: {exc}") from None
        out[i] = curve.a, curve.b, curve.c, evaluate(curve, q_target)
    return out.T
