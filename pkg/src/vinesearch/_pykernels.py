"""Numpy fallbacks for the compiled kernels in ``_ckernels``.

Same algorithms and contracts; used when the extension is not built or
when ``VINESEARCH_PURE=1`` is set.
"""
import numpy as np
from scipy.special import erfc

_INV_SQRT2 = 0.70710678118654752440
_INV_SQRT2PI = 0.39894228040143267794
_CHUNK = 1 << 20


def _tie_pairs(sorted_vals):
    if sorted_vals.size < 2:
        return 0
    change = np.flatnonzero(np.diff(sorted_vals) != 0)
    bounds = np.concatenate(([0], change + 1, [sorted_vals.size]))
    runs = np.diff(bounds).astype(np.int64)
    return int(np.sum(runs * (runs - 1) // 2))


def _count_inversions(y):
    """Strict inversions of ``y`` by bottom-up merging of sorted blocks."""
    n = y.size
    # dense ranks keep the keys integral so block offsets cannot collide
    _, r = np.unique(y, return_inverse=True)
    r = r.astype(np.int64)
    span = n + 1
    swaps = 0
    width = 1
    pos = np.arange(n)
    while width < n:
        block = pos // width
        pair = block // 2
        is_left = (block % 2) == 0
        keys = pair * span + r
        left_keys = keys[is_left]
        right_keys = keys[~is_left]
        if right_keys.size:
            right_pair = pair[~is_left]
            above = np.searchsorted(left_keys, right_keys, side="right")
            end = np.searchsorted(left_keys, (right_pair + 1) * span, side="left")
            swaps += int(np.sum(end - above))
        r = r[np.argsort(keys, kind="stable")]
        width *= 2
    return swaps


def kendall_tau_sorted(x, y):
    """Kendall's tau-b for data already sorted lexicographically by (x, y)."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    n = x.size
    if n < 2:
        return 0.0
    n0 = n * (n - 1) // 2
    n1 = _tie_pairs(x)
    same_x = np.diff(x) == 0
    same_xy = same_x & (np.diff(y) == 0)
    # joint ties: runs of consecutive equal (x, y) pairs
    breaks = np.flatnonzero(~same_xy)
    bounds = np.concatenate(([0], breaks + 1, [n]))
    runs = np.diff(bounds).astype(np.int64)
    n3 = int(np.sum(runs * (runs - 1) // 2))
    swaps = _count_inversions(y)
    n2 = _tie_pairs(np.sort(y))
    denom = np.sqrt(float(n0 - n1) * float(n0 - n2))
    if denom == 0.0:
        return 0.0
    return (float(n0 - n1 - n2 + n3) - 2.0 * swaps) / denom


def kernel_cdf(xs, z, h):
    """Mean of Phi((z - x_i) / h) over sample xs (dense evaluation)."""
    xs = np.asarray(xs, dtype=np.float64)
    z = np.asarray(z, dtype=np.float64)
    out = np.empty(z.size)
    step = max(1, _CHUNK // max(xs.size, 1))
    for s in range(0, z.size, step):
        t = (z[s:s + step, None] - xs[None, :]) / h
        out[s:s + step] = np.mean(0.5 * erfc(-t * _INV_SQRT2), axis=1)
    return out


def kernel_pdf(xs, z, h):
    """Mean of phi((z - x_i) / h) / h over sample xs (dense evaluation)."""
    xs = np.asarray(xs, dtype=np.float64)
    z = np.asarray(z, dtype=np.float64)
    out = np.empty(z.size)
    step = max(1, _CHUNK // max(xs.size, 1))
    for s in range(0, z.size, step):
        t = (z[s:s + step, None] - xs[None, :]) / h
        out[s:s + step] = np.mean(np.exp(-0.5 * t * t), axis=1) * _INV_SQRT2PI / h
    return out
