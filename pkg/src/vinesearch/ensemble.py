"""Equal-weight vine mixtures and grid-based conditional prediction.

Conditional means and quantiles of column 0 given the others are roots of
discretized estimating equations on a grid of candidate responses. The
grid weights are ``f_Y(y_g) * sum_V c_V(F_Y(y_g), F_X(x))``.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from .errors import NumericError
from .vinecop import simpson_weights

__all__ = [
    "MixtureModel",
    "PredictionGrid",
    "conditional_weights",
    "predict_mean",
    "predict_quantile",
    "weighted_quantile",
    "pav",
    "crps_from_quantiles",
    "DEFAULT_LEVELS",
]

DEFAULT_LEVELS = np.round(np.arange(1, 100) / 100.0, 2)


class MixtureModel:
    """Arithmetic mean of member densities.

    Members share dimension; data-scale methods use the margins and
    scaling of the first member.
    """

    def __init__(self, members):
        members = list(members)
        if not members:
            raise ValueError("a mixture needs at least one member")
        d = members[0].d
        if any(m.d != d for m in members):
            raise ValueError("mixture members differ in dimension")
        self.members = members

    @property
    def d(self):
        return self.members[0].d

    @property
    def size(self):
        return len(self.members)

    @property
    def lead(self):
        return self.members[0]

    def _mix(self, logs):
        logs = np.vstack(logs)
        return logsumexp(logs, axis=0) - math.log(len(logs))

    def logpdf(self, u):
        """Log copula density of the mixture."""
        if self.size == 1:
            return self.lead.logpdf(u)
        return self._mix([m.logpdf(u) for m in self.members])

    def pdf(self, u):
        return np.exp(self.logpdf(u))

    def data_logpdf(self, X):
        lead = self.lead
        Z = lead.standardize(X)
        u = lead.to_uniform(X)
        lm = sum(m.logpdf(Z[:, j]) for j, m in enumerate(lead.marginals))
        return self.logpdf(u) + lm + lead._log_jacobian(slice(None))

    def conditional_logpdf(self, u, grid_size=101):
        """Copula-scale log density of coordinate 0 given the rest."""
        u = np.atleast_2d(np.asarray(u, dtype=float))
        n = u.shape[0]
        w = simpson_weights(grid_size)
        grid = np.linspace(0.0, 1.0, grid_size)
        ug = np.repeat(u, grid_size, axis=0)
        ug[:, 0] = np.tile(grid, n)
        nums, dens = [], []
        for m in self.members:
            nums.append(m.logpdf(u))
            dens.append(logsumexp(m.logpdf(ug).reshape(n, grid_size), b=w[None, :], axis=1))
        return logsumexp(np.vstack(nums), axis=0) - logsumexp(np.vstack(dens), axis=0)

    def data_conditional_logpdf(self, X, grid_size=101):
        lead = self.lead
        Z = lead.standardize(X)
        u = lead.to_uniform(X)
        lc = self.conditional_logpdf(u, grid_size)
        return lc + lead.marginals[0].logpdf(Z[:, 0]) + lead._log_jacobian([0])


@dataclass(frozen=True)
class PredictionGrid:
    """Equally spaced response values padded by 10% of the training range."""

    points: np.ndarray

    @classmethod
    def from_training(cls, y, size=101, pad=0.1):
        y = np.asarray(y, dtype=float)
        lo, hi = float(np.min(y)), float(np.max(y))
        delta = pad * (hi - lo)
        return cls(np.linspace(lo - delta, hi + delta, int(size)))

    @property
    def size(self):
        return self.points.size


def _log_weights(mm, X, grid, chunk=64):
    """Unnormalized log grid weights, shape (n_queries, G)."""
    lead = mm.lead
    X = np.atleast_2d(np.asarray(X, dtype=float))
    n, G = X.shape[0], grid.size
    if X.shape[1] != mm.d - 1:
        raise ValueError(f"expected {mm.d - 1} feature columns, got {X.shape[1]}")
    mY = lead.marginals[0]
    zy = grid.points if lead.scale is None else (grid.points - lead.scale[0][0]) / lead.scale[1][0]
    uy = mY.cdf(zy)
    with np.errstate(divide="ignore"):
        log_fy = np.log(mY.pdf(zy))
    out = np.empty((n, G))
    for s in range(0, n, chunk):
        xs = X[s: s + chunk]
        k = xs.shape[0]
        # dummy response column; only the features are transformed here
        full = np.column_stack([np.zeros(k), xs])
        ux = lead.to_uniform(full)[:, 1:]
        pts = np.empty((k * G, mm.d))
        pts[:, 0] = np.tile(uy, k)
        pts[:, 1:] = np.repeat(ux, G, axis=0)
        logs = [m.logpdf(pts) for m in mm.members]
        lc = logsumexp(np.vstack(logs), axis=0).reshape(k, G)
        out[s: s + k] = lc + log_fy[None, :]
    return out


def conditional_weights(mm, X, grid, normalize=True):
    """Grid weights for each feature row of ``X``.

    Rows whose weights all vanish fall back to the marginal density of
    the response (a warning is issued).
    """
    lw = _log_weights(mm, X, grid)
    mx = lw.max(axis=1, keepdims=True)
    bad = ~np.isfinite(mx[:, 0])
    if np.any(bad):
        warnings.warn(f"{int(bad.sum())} queries had zero grid weight; using marginal weights",
                      RuntimeWarning)
        lead = mm.lead
        zy = grid.points if lead.scale is None else (grid.points - lead.scale[0][0]) / lead.scale[1][0]
        with np.errstate(divide="ignore"):
            lw[bad] = np.log(lead.marginals[0].pdf(zy))[None, :]
        mx = lw.max(axis=1, keepdims=True)
        if not np.all(np.isfinite(mx)):
            raise NumericError("grid weights vanish even under the marginal density")
    w = np.exp(lw - mx)
    if normalize:
        w /= w.sum(axis=1, keepdims=True)
    return w


def predict_mean(weights, grid):
    """Root of the discretized estimating equation for the mean."""
    w = np.atleast_2d(np.asarray(weights, dtype=float))
    y = grid.points if isinstance(grid, PredictionGrid) else np.asarray(grid, dtype=float)
    tot = w.sum(axis=1)
    if np.any(tot <= 0.0):
        raise NumericError("degenerate grid weights")
    return (w @ y) / tot


def weighted_quantile(values, weights, tau):
    """Inverted-CDF weighted quantile: smallest value with cumulative weight >= tau.

    ``weights`` may be 2-d (one row per query); ``tau`` may be a vector of
    levels in [0, 1].
    """
    v = np.asarray(values, dtype=float)
    w = np.atleast_2d(np.asarray(weights, dtype=float))
    tau = np.atleast_1d(np.asarray(tau, dtype=float))
    cum = np.cumsum(w, axis=1)
    cum /= cum[:, -1:]
    out = np.empty((w.shape[0], tau.size))
    for i in range(w.shape[0]):
        idx = np.searchsorted(cum[i], tau, side="left")
        out[i] = v[np.minimum(idx, v.size - 1)]
    return out


def predict_quantile(weights, grid, tau):
    tau = np.atleast_1d(np.asarray(tau, dtype=float))
    if np.any((tau <= 0.0) | (tau >= 1.0)):
        raise ValueError("quantile levels must lie in (0, 1)")
    y = grid.points if isinstance(grid, PredictionGrid) else np.asarray(grid, dtype=float)
    return weighted_quantile(y, weights, tau)


def pav(q):
    """Least-squares nondecreasing fit (pool adjacent violators)."""
    q = np.asarray(q, dtype=float)
    vals, cnts = [], []
    for x in q:
        vals.append(x)
        cnts.append(1)
        while len(vals) > 1 and vals[-2] > vals[-1]:
            c = cnts[-2] + cnts[-1]
            vals[-2] = (vals[-2] * cnts[-2] + vals[-1] * cnts[-1]) / c
            cnts[-2] = c
            vals.pop()
            cnts.pop()
    return np.repeat(vals, cnts)


def crps_from_quantiles(q, y, levels=None):
    """CRPS from a quantile curve on equally spaced levels covering [0, 1].

    Parameters
    ----------
    q : array_like, shape (K,) or (n, K)
        Quantiles at ``levels``; repaired to be nondecreasing first.
    y : float or array_like, shape (n,)
    levels : array_like, optional
        Defaults to ``K`` equally spaced levels from 0 to 1. ``K`` must be
        odd and at least 3.
    """
    q = np.atleast_2d(np.asarray(q, dtype=float))
    K = q.shape[1]
    if K < 3 or K % 2 == 0:
        raise ValueError("CRPS needs an odd number (>= 3) of quantile levels")
    tau = np.linspace(0.0, 1.0, K) if levels is None else np.asarray(levels, dtype=float)
    y = np.broadcast_to(np.asarray(y, dtype=float).reshape(-1, 1), (q.shape[0], 1))
    q = np.vstack([pav(row) for row in q])
    u = y - q
    check = u * (tau[None, :] - (u < 0.0))
    w = simpson_weights(K) * (tau[-1] - tau[0])
    out = 2.0 * (check @ w)
    return out if out.size > 1 else float(out[0])
