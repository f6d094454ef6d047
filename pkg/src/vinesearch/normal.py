"""Standard normal CDF, density and quantile.

The quantile uses Acklam's rational approximation (relative error about
1.15e-9) followed by one Newton step against the erfc-based CDF.
"""
import numpy as np
from scipy.special import erfc

_SQRT2 = np.sqrt(2.0)
_SQRT2PI = np.sqrt(2.0 * np.pi)

_A = (-3.969683028665376e01, 2.209460984245205e02, -2.759285104469687e02,
      1.383577518672690e02, -3.066479806614716e01, 2.506628277459239e00)
_B = (-5.447609879822406e01, 1.615858368580409e02, -1.556989798598866e02,
      6.680131188771972e01, -1.328068155288572e01)
_C = (-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e00,
      -2.549732539343734e00, 4.374664141464968e00, 2.938163982698783e00)
_D = (7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e00,
      3.754408661907416e00)
_P_LOW = 0.02425


def norm_cdf(x):
    """Phi(x) = erfc(-x / sqrt(2)) / 2."""
    return 0.5 * erfc(-np.asarray(x, dtype=float) / _SQRT2)


def norm_pdf(x):
    x = np.asarray(x, dtype=float)
    return np.exp(-0.5 * x * x) / _SQRT2PI


def _acklam(p):
    x = np.empty_like(p)
    lo = p < _P_LOW
    hi = p > 1.0 - _P_LOW
    mid = ~(lo | hi)

    q = np.sqrt(-2.0 * np.log(p[lo]))
    x[lo] = (((((_C[0] * q + _C[1]) * q + _C[2]) * q + _C[3]) * q + _C[4]) * q + _C[5]) / \
        ((((_D[0] * q + _D[1]) * q + _D[2]) * q + _D[3]) * q + 1.0)

    q = np.sqrt(-2.0 * np.log1p(-p[hi]))
    x[hi] = -(((((_C[0] * q + _C[1]) * q + _C[2]) * q + _C[3]) * q + _C[4]) * q + _C[5]) / \
        ((((_D[0] * q + _D[1]) * q + _D[2]) * q + _D[3]) * q + 1.0)

    q = p[mid] - 0.5
    r = q * q
    x[mid] = (((((_A[0] * r + _A[1]) * r + _A[2]) * r + _A[3]) * r + _A[4]) * r + _A[5]) * q / \
        (((((_B[0] * r + _B[1]) * r + _B[2]) * r + _B[3]) * r + _B[4]) * r + 1.0)
    return x


def norm_ppf(p):
    """Phi^-1(p) for p in [0, 1]; returns -inf / +inf at the endpoints.

    Accuracy: |Phi(norm_ppf(p)) - p| <= 1e-12 on [1e-10, 1 - 1e-10].
    """
    p = np.asarray(p, dtype=float)
    scalar = p.ndim == 0
    p = np.atleast_1d(p)
    if np.any((p < 0.0) | (p > 1.0) | np.isnan(p)):
        raise ValueError("norm_ppf argument must lie in [0, 1]")
    out = np.empty_like(p)
    inner = (p > 0.0) & (p < 1.0)
    out[p == 0.0] = -np.inf
    out[p == 1.0] = np.inf
    pi = p[inner]
    x = _acklam(pi)
    # Newton polish; upper half is done through the complement to keep precision
    upper = pi > 0.5
    resid = np.where(upper, (1.0 - pi) - norm_cdf(-x), norm_cdf(x) - pi)
    x = x - resid / norm_pdf(x)
    out[inner] = x
    return out[0] if scalar else out
