"""One-parameter bivariate copula families.

Families: ``indep``, ``gaussian``, ``clayton``, ``gumbel``, ``frank``.
Clayton and Gumbel also come in 90/180/270 degree rotations so that
negative dependence and the opposite tail are covered.

Conventions for a copula C(u, v):

* ``hfunc1(u, v) = dC/du``, the conditional CDF of V given U = u.
* ``hfunc2(u, v) = dC/dv``, the conditional CDF of U given V = v.
* ``hinv1(u, w)`` solves ``hfunc1(u, v) = w`` for v.
* ``hinv2(w, v)`` solves ``hfunc2(u, v) = w`` for u.

All evaluators clamp their inputs to ``[EPS, 1 - EPS]``.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy import integrate, optimize

from .normal import norm_cdf, norm_ppf

EPS = 1e-10

FAMILIES = ("indep", "gaussian", "clayton", "gumbel", "frank")
ROTATABLE = ("clayton", "gumbel")
DEFAULT_FAMILY_SET = FAMILIES

_BOUNDS = {
    "gaussian": (-0.9999, 0.9999),
    "clayton": (1e-4, 28.0),
    "gumbel": (1.0, 28.0),
    "frank": (1e-4, 50.0),
}


class ParameterError(ValueError):
    pass


def _clamp(x):
    return np.clip(np.asarray(x, dtype=float), EPS, 1.0 - EPS)


# -- base families (rotation 0) --------------------------------------------

def _gauss_logpdf(u, v, rho):
    x, y = norm_ppf(u), norm_ppf(v)
    r2 = 1.0 - rho * rho
    return -(rho * rho * (x * x + y * y) - 2.0 * rho * x * y) / (2.0 * r2) - 0.5 * math.log(r2)


def _gauss_h1(u, v, rho):
    x, y = norm_ppf(u), norm_ppf(v)
    return norm_cdf((y - rho * x) / math.sqrt(1.0 - rho * rho))


def _gauss_hinv1(u, w, rho):
    x, z = norm_ppf(u), norm_ppf(w)
    return norm_cdf(z * math.sqrt(1.0 - rho * rho) + rho * x)


def _gauss_cdf(u, v, rho):
    from scipy.stats import multivariate_normal

    pts = np.column_stack([norm_ppf(np.ravel(u)), norm_ppf(np.ravel(v))])
    mvn = multivariate_normal(mean=[0.0, 0.0], cov=[[1.0, rho], [rho, 1.0]])
    return np.reshape(mvn.cdf(pts), np.shape(u))


def _clayton_logS(u, v, th):
    # log(u^-th + v^-th - 1), overflow-safe
    t1 = -th * np.log(u)
    t2 = -th * np.log(v)
    m = np.maximum(t1, t2)
    return m + np.log(np.exp(t1 - m) + np.exp(t2 - m) - np.exp(-m))


def _clayton_logpdf(u, v, th):
    return (math.log1p(th) - (1.0 + th) * (np.log(u) + np.log(v))
            - (2.0 + 1.0 / th) * _clayton_logS(u, v, th))


def _clayton_h1(u, v, th):
    return np.exp(-(th + 1.0) * np.log(u) - (1.0 / th + 1.0) * _clayton_logS(u, v, th))


def _clayton_hinv1(u, w, th):
    tu = -th * np.log(u)
    b = -th / (1.0 + th) * np.log(w)
    with np.errstate(divide="ignore"):
        lz = tu + np.log(np.expm1(b))
    return np.exp(-np.logaddexp(0.0, lz) / th)


def _clayton_cdf(u, v, th):
    return np.exp(-_clayton_logS(u, v, th) / th)


def _gumbel_parts(u, v, th):
    lx = np.log(-np.log(u))
    ly = np.log(-np.log(v))
    logA = np.logaddexp(th * lx, th * ly)
    s = np.exp(logA / th)
    return lx, ly, logA, s


def _gumbel_logpdf(u, v, th):
    lx, ly, logA, s = _gumbel_parts(u, v, th)
    return (-s + (th - 1.0) * (lx + ly) - np.log(u) - np.log(v)
            + (2.0 / th - 2.0) * logA + np.log1p((th - 1.0) / s))


def _gumbel_h1(u, v, th):
    lx, _, logA, s = _gumbel_parts(u, v, th)
    return np.exp(-s + (1.0 / th - 1.0) * logA + (th - 1.0) * lx - np.log(u))


def _gumbel_cdf(u, v, th):
    return np.exp(-_gumbel_parts(u, v, th)[3])


def _frank_den(u, v, th):
    # (1 - e^-th) - (1 - e^-th u)(1 - e^-th v) for th > 0; the expanded
    # form avoids cancellation near (1, 1) once th is large
    if th < 1.0:
        return -np.expm1(-th) - np.expm1(-th * u) * np.expm1(-th * v)
    return np.exp(-th * u) + np.exp(-th * v) - np.exp(-th * (u + v)) - np.exp(-th)


def _frank_logpdf(u, v, th):
    if th < 0.0:
        # c_{-th}(u, v) = c_th(u, 1 - v)
        th, v = -th, 1.0 - v
    den = _frank_den(u, v, th)
    return np.log(th) + np.log(-np.expm1(-th)) - th * (u + v) - 2.0 * np.log(den)


def _frank_h1(u, v, th):
    if th < 0.0:
        return 1.0 - _frank_h1(u, 1.0 - v, -th)
    return np.exp(-th * u) * -np.expm1(-th * v) / _frank_den(u, v, th)


def _frank_hinv1(u, w, th):
    with np.errstate(divide="ignore"):
        lw, l1w = np.log(w), np.log1p(-w)
    num = np.logaddexp(l1w - th * u, lw - th)
    den = np.logaddexp(lw, l1w - th * u)
    return -(num - den) / th


def _frank_cdf(u, v, th):
    if th < 0.0:
        return u - _frank_cdf(u, 1.0 - v, -th)
    if th < 1.0:
        return -np.log1p(np.expm1(-th * u) * np.expm1(-th * v) / np.expm1(-th)) / th
    return -(np.log(_frank_den(u, v, th)) - np.log(-np.expm1(-th))) / th


def _bisect_hinv1(h1, u, w, th, iters=60):
    lo = np.zeros_like(w)
    hi = np.ones_like(w)
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        below = h1(u, _clamp(mid), th) < w
        lo = np.where(below, mid, lo)
        hi = np.where(below, hi, mid)
    return 0.5 * (lo + hi)


_BASE = {
    "gaussian": (_gauss_logpdf, _gauss_h1, _gauss_hinv1, _gauss_cdf),
    "clayton": (_clayton_logpdf, _clayton_h1, _clayton_hinv1, _clayton_cdf),
    "gumbel": (_gumbel_logpdf, _gumbel_h1, None, _gumbel_cdf),
    "frank": (_frank_logpdf, _frank_h1, _frank_hinv1, _frank_cdf),
}


# -- tau <-> parameter -----------------------------------------------------

def _debye1(x):
    if x == 0.0:
        return 1.0
    val, _ = integrate.quad(lambda t: t / math.expm1(t) if t != 0.0 else 1.0,
                            0.0, abs(x), epsabs=1e-14, epsrel=1e-13, limit=200)
    return val / abs(x)


def _frank_tau(th):
    if th == 0.0:
        return 0.0
    a = abs(th)
    tau = 1.0 + 4.0 * (_debye1(a) - 1.0) / a
    return math.copysign(tau, th)


def _base_tau(family, theta):
    if family == "indep":
        return 0.0
    if family == "gaussian":
        return 2.0 / math.pi * math.asin(theta)
    if family == "clayton":
        return theta / (theta + 2.0)
    if family == "gumbel":
        return 1.0 - 1.0 / theta
    if family == "frank":
        return _frank_tau(theta)
    raise ParameterError(f"unknown family {family!r}")


def _check_family(family, rotation):
    if family not in FAMILIES:
        raise ParameterError(f"unknown family {family!r}")
    if rotation not in (0, 90, 180, 270):
        raise ParameterError(f"rotation must be 0, 90, 180 or 270, got {rotation}")
    if rotation and family not in ROTATABLE:
        raise ParameterError(f"family {family!r} takes no rotation")


def _check_param(family, theta):
    if family == "indep":
        return
    if not np.isfinite(theta):
        raise ParameterError(f"{family} parameter must be finite")
    if family == "gaussian" and not -1.0 < theta < 1.0:
        raise ParameterError(f"gaussian rho must lie in (-1, 1), got {theta}")
    if family == "clayton" and not theta > 0.0:
        raise ParameterError(f"clayton theta must be > 0, got {theta}")
    if family == "gumbel" and not theta >= 1.0:
        raise ParameterError(f"gumbel theta must be >= 1, got {theta}")
    if family == "frank" and theta == 0.0:
        raise ParameterError("frank theta must be nonzero")


def par_to_tau(family, theta, rotation=0):
    """Kendall's tau implied by a family parameter."""
    _check_family(family, rotation)
    _check_param(family, theta)
    tau = _base_tau(family, theta)
    return -tau if rotation in (90, 270) else tau


def tau_to_par(family, tau, rotation=0):
    """Parameter with Kendall's tau equal to ``tau``."""
    _check_family(family, rotation)
    if not -1.0 < tau < 1.0:
        raise ParameterError(f"tau must lie in (-1, 1), got {tau}")
    if family == "indep":
        return 0.0
    t = -tau if rotation in (90, 270) else tau
    if family == "gaussian":
        return math.sin(math.pi * tau / 2.0)
    if family == "clayton":
        if t <= 0.0:
            raise ParameterError(f"clayton (rotation {rotation}) cannot reach tau={tau}")
        return 2.0 * t / (1.0 - t)
    if family == "gumbel":
        if t < 0.0:
            raise ParameterError(f"gumbel (rotation {rotation}) cannot reach tau={tau}")
        return 1.0 / (1.0 - t)
    # frank
    if t == 0.0:
        raise ParameterError("frank cannot represent tau = 0")
    a = abs(t)
    hi = 1.0
    while _frank_tau(hi) < a:
        hi *= 2.0
        if hi > 1e6:
            raise ParameterError(f"frank cannot reach tau={tau}")
    th = optimize.brentq(lambda x: _frank_tau(x) - a, 1e-12, hi, xtol=1e-12, rtol=1e-15)
    return math.copysign(th, t)


# -- the copula object -----------------------------------------------------

@dataclass(frozen=True)
class PairCopula:
    family: str = "indep"
    theta: float = 0.0
    rotation: int = 0

    def __post_init__(self):
        _check_family(self.family, self.rotation)
        _check_param(self.family, self.theta)
        if self.family == "indep":
            object.__setattr__(self, "theta", 0.0)
        object.__setattr__(self, "theta", float(self.theta))
        object.__setattr__(self, "rotation", int(self.rotation))

    @property
    def tau(self):
        return par_to_tau(self.family, self.theta, self.rotation)

    @property
    def nparams(self):
        return 0 if self.family == "indep" else 1

    @property
    def is_indep(self):
        return self.family == "indep"

    def swap(self):
        """Copula of (V, U); the exchangeable bases make this rot 90 <-> 270."""
        rot = {90: 270, 270: 90}.get(self.rotation, self.rotation)
        return PairCopula(self.family, self.theta, rot)

    # evaluators ----------------------------------------------------------
    def logpdf(self, u, v):
        u, v = _clamp(u), _clamp(v)
        if self.family == "indep":
            return np.zeros(np.broadcast(u, v).shape)
        f = _BASE[self.family][0]
        r = self.rotation
        if r == 90:
            return f(1.0 - u, v, self.theta)
        if r == 180:
            return f(1.0 - u, 1.0 - v, self.theta)
        if r == 270:
            return f(u, 1.0 - v, self.theta)
        return f(u, v, self.theta)

    def pdf(self, u, v):
        return np.exp(self.logpdf(u, v))

    def cdf(self, u, v):
        u, v = _clamp(u), _clamp(v)
        if self.family == "indep":
            return u * v
        C = _BASE[self.family][3]
        th, r = self.theta, self.rotation
        if r == 90:
            out = v - C(1.0 - u, v, th)
        elif r == 180:
            out = u + v - 1.0 + C(1.0 - u, 1.0 - v, th)
        elif r == 270:
            out = u - C(u, 1.0 - v, th)
        else:
            out = C(u, v, th)
        return np.clip(out, 0.0, 1.0)

    def _h1_base(self, u, v):
        return _BASE[self.family][1](u, v, self.theta)

    def _hinv1_base(self, u, w):
        inv = _BASE[self.family][2]
        h1 = _BASE[self.family][1]
        if inv is None:
            return _bisect_hinv1(h1, u, w, self.theta)
        v = _clamp(inv(u, w, self.theta))
        # one guarded Newton step; the closed forms lose digits in the tails
        resid = h1(u, v, self.theta) - w
        dens = np.exp(_BASE[self.family][0](u, v, self.theta))
        with np.errstate(divide="ignore", invalid="ignore"):
            v2 = _clamp(v - resid / dens)
        better = np.abs(h1(u, v2, self.theta) - w) < np.abs(resid)
        return np.where(better, v2, v)

    # base families are exchangeable, so h2(u, v) = h1(v, u)
    def hfunc1(self, u, v):
        u, v = _clamp(u), _clamp(v)
        if self.family == "indep":
            return np.broadcast_to(v, np.broadcast(u, v).shape).copy()
        r = self.rotation
        if r == 90:
            out = self._h1_base(1.0 - u, v)
        elif r == 180:
            out = 1.0 - self._h1_base(1.0 - u, 1.0 - v)
        elif r == 270:
            out = 1.0 - self._h1_base(u, 1.0 - v)
        else:
            out = self._h1_base(u, v)
        return np.clip(out, 0.0, 1.0)

    def hfunc2(self, u, v):
        u, v = _clamp(u), _clamp(v)
        if self.family == "indep":
            return np.broadcast_to(u, np.broadcast(u, v).shape).copy()
        r = self.rotation
        if r == 90:
            out = 1.0 - self._h1_base(v, 1.0 - u)
        elif r == 180:
            out = 1.0 - self._h1_base(1.0 - v, 1.0 - u)
        elif r == 270:
            out = self._h1_base(1.0 - v, u)
        else:
            out = self._h1_base(v, u)
        return np.clip(out, 0.0, 1.0)

    def hinv1(self, u, w):
        u, w = _clamp(u), _clamp(w)
        if self.family == "indep":
            return np.broadcast_to(w, np.broadcast(u, w).shape).copy()
        r = self.rotation
        if r == 90:
            out = self._hinv1_base(1.0 - u, w)
        elif r == 180:
            out = 1.0 - self._hinv1_base(1.0 - u, 1.0 - w)
        elif r == 270:
            out = 1.0 - self._hinv1_base(u, 1.0 - w)
        else:
            out = self._hinv1_base(u, w)
        return np.clip(out, 0.0, 1.0)

    def hinv2(self, w, v):
        w, v = _clamp(w), _clamp(v)
        if self.family == "indep":
            return np.broadcast_to(w, np.broadcast(w, v).shape).copy()
        r = self.rotation
        if r == 90:
            out = 1.0 - self._hinv1_base(v, 1.0 - w)
        elif r == 180:
            out = 1.0 - self._hinv1_base(1.0 - v, 1.0 - w)
        elif r == 270:
            out = self._hinv1_base(1.0 - v, w)
        else:
            out = self._hinv1_base(v, w)
        return np.clip(out, 0.0, 1.0)

    def loglik(self, u, v):
        return float(np.sum(self.logpdf(u, v)))

    def simulate(self, n, rng=None):
        rng = np.random.default_rng(rng)
        w = rng.random((n, 2))
        return np.column_stack([w[:, 0], self.hinv1(w[:, 0], w[:, 1])])

    def to_text(self):
        return f"{self.family} {self.rotation} {self.theta!r}"

    @classmethod
    def from_text(cls, line):
        fam, rot, th = line.split()
        return cls(fam, float(th), int(rot))


INDEP = PairCopula()


# -- fitting ---------------------------------------------------------------

def _candidates(family_set, tau):
    out = []
    for fam in family_set:
        if fam == "indep":
            out.append(("indep", 0))
        elif fam in ROTATABLE:
            rots = (0, 180) if tau >= 0.0 else (90, 270)
            out.extend((fam, r) for r in rots)
        elif fam in FAMILIES:
            out.append((fam, 0))
        else:
            raise ParameterError(f"unknown family {fam!r}")
    return out


def _bounds(family, tau):
    lo, hi = _BOUNDS[family]
    if family == "frank" and tau < 0.0:
        return -hi, -lo
    return lo, hi


def _start(family, rotation, tau, bounds):
    try:
        th = tau_to_par(family, tau, rotation)
    except ParameterError:
        return None
    return min(max(th, bounds[0]), bounds[1])


def _fit_one(family, rotation, u, v, tau):
    bounds = _bounds(family, tau)

    def nll(th):
        val = -PairCopula(family, th, rotation).loglik(u, v)
        return val if np.isfinite(val) else 1e300

    res = optimize.minimize_scalar(
        nll, bounds=bounds, method="bounded", options={"xatol": 1e-8, "maxiter": 200}
    )
    best_th, best = float(res.x), float(res.fun)
    start = _start(family, rotation, tau, bounds)
    if start is not None:
        s_val = nll(start)
        if s_val < best:
            best_th, best = start, s_val
    if best >= 1e300:
        return None, -np.inf
    return PairCopula(family, best_th, rotation), -best


def fit(u, v=None, family_set=DEFAULT_FAMILY_SET, criterion="aic", tau=None):
    """Select and fit a pair copula by maximum likelihood and AIC/BIC.

    ``u`` is either an ``(n, 2)`` array or the first column with ``v`` the
    second. ``tau`` may pass a precomputed empirical Kendall's tau.
    """
    if v is None:
        u = np.asarray(u, dtype=float)
        u, v = u[:, 0], u[:, 1]
    u, v = _clamp(u), _clamp(v)
    n = u.size
    if n < 10:
        raise ValueError(f"need at least 10 pairs to fit a pair copula, got {n}")
    if criterion not in ("aic", "bic"):
        raise ValueError(f"unknown criterion {criterion!r}")
    if tau is None:
        from .select import kendall_tau
        tau = kendall_tau(u, v)
    penalty = 2.0 if criterion == "aic" else math.log(n)
    best, best_crit = None, np.inf
    for fam, rot in _candidates(family_set, tau):
        if fam == "indep":
            pc, ll = INDEP, 0.0
        else:
            pc, ll = _fit_one(fam, rot, u, v, tau)
            if pc is None:
                continue
        crit = -2.0 * ll + penalty * pc.nparams
        if crit < best_crit:
            best, best_crit = pc, crit
    if best is None:
        warnings.warn("all pair-copula fits degenerate; using independence", RuntimeWarning)
        return INDEP
    return best
