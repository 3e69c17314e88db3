"""Box-constrained Nelder-Mead advanced over many starts at once.

Each start owns its own simplex; all simplices step together so that the
objective is always evaluated on a stack of candidate points. Candidates are
projected onto the box after every move.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

_REFLECT, _EXPAND, _CONTRACT, _SHRINK = 1.0, 2.0, 0.5, 0.5


@dataclass(frozen=True)
class MultistartResult:
    x: np.ndarray  # (S, d) best vertex of every simplex
    fun: np.ndarray  # (S,)
    x0: np.ndarray  # (S, d) start points
    f0: np.ndarray  # (S,) objective at the starts
    nfev: np.ndarray  # (S,)

    @property
    def best(self) -> int:
        """Index of the best start; lowest index wins ties."""
        return int(np.argmin(self.fun))


def nelder_mead_multistart(
    fun: Callable[[np.ndarray], np.ndarray],
    starts: np.ndarray,
    lower,
    upper,
    max_evals: int,
    step: float = 0.1,
    xatol: float = 1e-6,
    fatol: float = 1e-12,
) -> MultistartResult:
    """Minimize ``fun`` from every row of ``starts``.

    ``fun`` maps an (k, d) array to k values (``inf`` allowed). ``step`` is
    the initial simplex edge as a fraction of the box width. ``max_evals``
    is the per-start budget, initial simplex included.
    """
    starts = np.atleast_2d(np.asarray(starts, dtype=float))
    lower = np.broadcast_to(np.asarray(lower, dtype=float), starts.shape[1:])
    upper = np.broadcast_to(np.asarray(upper, dtype=float), starts.shape[1:])
    S, d = starts.shape
    width = upper - lower

    def clip(P):
        return np.clip(P, lower, upper)

    # initial simplices: x0 and x0 + step*width*e_j, stepping inward at the upper face
    simplex = np.repeat(starts[:, None, :], d + 1, axis=1)
    for j in range(d):
        delta = step * width[j]
        up = starts[:, j] + delta <= upper[j]
        simplex[:, j + 1, j] = np.where(up, starts[:, j] + delta, starts[:, j] - delta)
    simplex = clip(simplex)
    fvals = np.asarray(fun(simplex.reshape(-1, d)), dtype=float).reshape(S, d + 1)
    f0 = fvals[:, 0].copy()
    nfev = np.full(S, d + 1)
    active = np.ones(S, dtype=bool)

    while True:
        order = np.argsort(fvals, axis=1, kind="stable")
        simplex = np.take_along_axis(simplex, order[:, :, None], axis=1)
        fvals = np.take_along_axis(fvals, order, axis=1)
        xspread = np.max(np.abs(simplex[:, 1:, :] - simplex[:, :1, :]), axis=(1, 2))
        with np.errstate(invalid="ignore"):
            fspread = fvals[:, -1] - fvals[:, 0]
        converged = (xspread <= xatol) & (fspread <= fatol)
        active &= ~converged & (nfev < max_evals)
        idx = np.flatnonzero(active)
        if idx.size == 0:
            break

        sx, sf = simplex[idx], fvals[idx]
        centroid = sx[:, :-1, :].mean(axis=1)
        worst = sx[:, -1, :]
        xr = clip(centroid + _REFLECT * (centroid - worst))
        fr = np.asarray(fun(xr), dtype=float)
        nfev[idx] += 1

        f_best, f_second, f_worst = sf[:, 0], sf[:, -2], sf[:, -1]
        expand = fr < f_best
        accept_r = (fr >= f_best) & (fr < f_second)
        outside = (fr >= f_second) & (fr < f_worst)
        inside = ~expand & ~accept_r & ~outside

        # expansion and outside contraction move along centroid -> xr, inside contraction towards worst
        coef = np.where(expand, _EXPAND, _CONTRACT)[:, None]
        target = np.where(inside[:, None], worst, xr)
        cand = clip(centroid + coef * (target - centroid))
        need = ~accept_r
        fc = np.full(idx.size, np.inf)
        if need.any():
            fc[need] = np.asarray(fun(cand[need]), dtype=float)
            nfev[idx[need]] += 1

        use_e = expand & (fc < fr)
        use_r = accept_r | (expand & ~use_e)
        ok_c = (outside & (fc <= fr)) | (inside & (fc < f_worst))
        take_c = (use_e | ok_c)[:, None]
        sx[:, -1, :] = np.where(take_c, cand, np.where(use_r[:, None], xr, worst))
        sf[:, -1] = np.where(use_e | ok_c, fc, np.where(use_r, fr, f_worst))

        shrink = (outside | inside) & ~ok_c
        if shrink.any():
            sh = sx[shrink]
            sh[:, 1:, :] = clip(sh[:, :1, :] + _SHRINK * (sh[:, 1:, :] - sh[:, :1, :]))
            fs = np.asarray(fun(sh[:, 1:, :].reshape(-1, d)), dtype=float).reshape(-1, d)
            sx[shrink] = sh
            sf[shrink, 1:] = fs
            nfev[idx[shrink]] += d
        simplex[idx], fvals[idx] = sx, sf

    return MultistartResult(simplex[:, 0, :].copy(), fvals[:, 0].copy(), starts.copy(), f0, nfev)
