"""Univariate margins and the probability integral transform.

Margins are Gaussian-kernel smoothed empirical distributions with
Silverman's rule-of-thumb bandwidth.
"""
from __future__ import annotations

import numpy as np
from scipy.special import logsumexp
from scipy.stats import rankdata

from . import _kernels
from .errors import DataError

__all__ = ["KernelMarginal", "fit_marginal", "pseudo_obs", "silverman_bandwidth"]


def silverman_bandwidth(x):
    x = np.asarray(x, dtype=float)
    n = x.size
    sd = np.std(x, ddof=1)
    q75, q25 = np.percentile(x, [75, 25])
    spread = min(sd, (q75 - q25) / 1.34)
    if spread <= 0.0:
        spread = sd
    return 0.9 * spread * n ** (-0.2)


class KernelMarginal:
    """Kernel-smoothed CDF, density and quantile of one variable."""

    def __init__(self, values, bandwidth):
        self.values = np.sort(np.asarray(values, dtype=float))
        self.bandwidth = float(bandwidth)
        if not self.bandwidth > 0.0:
            raise DataError("bandwidth must be positive")

    @property
    def n(self):
        return self.values.size

    @classmethod
    def fit(cls, x, name=None):
        x = np.asarray(x, dtype=float).ravel()
        label = f"column {name!r}" if name is not None else "column"
        if x.size < 10:
            raise DataError(f"{label}: need at least 10 observations, got {x.size}")
        if not np.all(np.isfinite(x)):
            raise DataError(f"{label}: non-finite values")
        if np.std(x) == 0.0:
            raise DataError(f"{label} is constant")
        return cls(x, silverman_bandwidth(x))

    def cdf(self, x):
        x = np.asarray(x, dtype=float)
        out = _kernels.kernel_cdf(self.values, np.ascontiguousarray(x.ravel()), self.bandwidth)
        return np.clip(out, 1e-15, 1.0 - 1e-15).reshape(x.shape)

    def pdf(self, x):
        x = np.asarray(x, dtype=float)
        out = _kernels.kernel_pdf(self.values, np.ascontiguousarray(x.ravel()), self.bandwidth)
        return out.reshape(x.shape)

    def logpdf(self, x):
        x = np.asarray(x, dtype=float)
        dens = self.pdf(x)
        out = np.empty(dens.shape)
        ok = dens > 1e-280
        out[ok] = np.log(dens[ok])
        if not np.all(ok):
            # far tails: the windowed kernel sum vanishes, so sum exactly in log space
            h = self.bandwidth
            t = (x[~ok].reshape(-1, 1) - self.values[None, :]) / h
            out[~ok] = (logsumexp(-0.5 * t * t, axis=1)
                        - np.log(self.values.size * h) - 0.5 * np.log(2.0 * np.pi))
        return out

    def quantile(self, p, tol=1e-10):
        """Inverse of :meth:`cdf` by vectorized bisection."""
        p = np.asarray(p, dtype=float)
        if np.any((p <= 0.0) | (p >= 1.0)):
            raise ValueError("quantile levels must lie in (0, 1)")
        flat = p.ravel()
        h = self.bandwidth
        lo = np.full(flat.shape, self.values[0] - 40.0 * h)
        hi = np.full(flat.shape, self.values[-1] + 40.0 * h)
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            c = self.cdf(mid)
            below = c < flat
            lo = np.where(below, mid, lo)
            hi = np.where(below, hi, mid)
            if np.all(np.abs(self.cdf(hi) - self.cdf(lo)) <= tol) or np.all(hi - lo <= 1e-14 * h):
                break
        return (0.5 * (lo + hi)).reshape(p.shape)

    def to_text(self):
        vals = " ".join(repr(float(v)) for v in self.values)
        return f"{self.bandwidth!r} {self.n}\n{vals}\n"

    @classmethod
    def from_lines(cls, lines):
        bw, n = lines[0].split()
        vals = np.array([float(v) for v in lines[1].split()])
        if vals.size != int(n):
            raise DataError(f"marginal block declares {n} values, found {vals.size}")
        return cls(vals, float(bw))


def fit_marginal(x, name=None):
    return KernelMarginal.fit(x, name)


def _check_matrix(X):
    X = np.asarray(X, dtype=float)
    if X.ndim != 2:
        raise DataError("expected a 2-d array")
    bad = np.argwhere(~np.isfinite(X))
    if bad.size:
        i, j = bad[0]
        raise DataError(f"missing or non-finite value at row {i}, column {j}")
    return X


def pseudo_obs(X, mode="rank", marginals=None):
    """Map each column to (0, 1).

    ``rank``: average ranks divided by ``n + 1``. ``kernel``: fitted kernel
    CDFs (fitted on ``X`` unless ``marginals`` are supplied).
    """
    X = _check_matrix(X)
    if mode == "rank":
        return rankdata(X, method="average", axis=0) / (X.shape[0] + 1.0)
    if mode == "kernel":
        if marginals is None:
            marginals = [KernelMarginal.fit(X[:, j], j) for j in range(X.shape[1])]
        return np.column_stack([m.cdf(X[:, j]) for j, m in enumerate(marginals)])
    raise ValueError(f"unknown pseudo-observation mode {mode!r}")
