"""Model confidence sets from per-instance loss matrices.

The discrete-argmin (DA) test splits the rows in two halves: the first
picks the strongest competitor of each model, the second studentizes the
mean loss difference against it. All statistics for ``M`` models cost
``O(N M)``.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, DataError
from .normal import norm_ppf

__all__ = [
    "McsResult",
    "check_loss_matrix",
    "two_smallest",
    "da_test_stat",
    "da_test_stats",
    "da_mcs_marg",
    "da_mcs_unif",
    "naive_da_mcs",
    "read_loss_csv",
    "write_loss_csv",
]


@dataclass(frozen=True)
class McsResult:
    """Outcome of a confidence-set computation (0-based model indices)."""

    included: tuple
    stats: tuple
    threshold: float
    m_tilde: int | None = None

    def to_dict(self, names=None):
        def enc(x):
            return x if math.isfinite(x) else ("inf" if x > 0 else "-inf")

        out = {
            "included": list(self.included),
            "stats": [enc(float(s)) for s in self.stats],
            "threshold": enc(float(self.threshold)),
            "m_tilde": self.m_tilde,
        }
        if names is not None:
            out["included_names"] = [names[i] for i in self.included]
        return out


def check_loss_matrix(L, min_rows=4):
    L = np.asarray(L, dtype=float)
    if L.ndim != 2:
        raise DataError("loss matrix must be two-dimensional")
    N, M = L.shape
    if M < 2:
        raise DataError("M >= 2 required (loss matrix needs at least two model columns)")
    if N < min_rows:
        raise DataError(f"loss matrix needs at least {min_rows} rows, got {N}")
    if not np.all(np.isfinite(L)):
        raise DataError("loss matrix contains NaN or infinite entries")
    return L


def two_smallest(sums):
    """Indices of the two smallest values and each entry's best competitor.

    Returns ``(j1, j2, comp)`` with ties going to the smallest index and
    ``comp[r]`` the argmin over ``m != r``.
    """
    sums = np.asarray(sums, dtype=float)
    M = sums.size
    if M < 2:
        raise ValueError("M >= 2 required")
    j1, j2 = (0, 1) if sums[0] <= sums[1] else (1, 0)
    for m in range(2, M):
        if sums[m] < sums[j1]:
            j1, j2 = m, j1
        elif sums[m] < sums[j2]:
            j2 = m
    comp = np.full(M, j1, dtype=np.intp)
    comp[j1] = j2
    return j1, j2, comp


def _stats(L):
    N = L.shape[0]
    half = N // 2
    first, second = L[:half], L[half:]
    _, _, comp = two_smallest(first.sum(axis=0))
    # differences against each model's competitor on the second half
    diff = second - second[:, comp]
    n2 = diff.shape[0]
    total = diff.sum(axis=0)
    var = diff.var(axis=0, ddof=1)
    sd = np.sqrt(var)
    scale = np.abs(diff).max(axis=0)
    with np.errstate(divide="ignore", invalid="ignore"):
        T = total / np.sqrt(var * n2)
    degenerate = (sd == 0.0) | (sd <= 1e-12 * scale)
    T = np.where(degenerate, np.where(total <= 0.0, -np.inf, np.inf), T)
    return T, comp


def da_test_stats(L):
    """DA statistics for every model; returns ``(T, competitors)``."""
    return _stats(check_loss_matrix(L))


def da_test_stat(L, r):
    """DA statistic of model ``r`` (0-based)."""
    T, _ = da_test_stats(L)
    return float(T[r])


def _check_alpha(alpha):
    if not 0.0 < alpha <= 0.5:
        raise ConfigError("alpha must lie in (0, 0.5]")


def da_mcs_marg(L, alpha=0.05):
    """Confidence set with a per-model (marginal) coverage guarantee."""
    _check_alpha(alpha)
    L = check_loss_matrix(L)
    T, _ = _stats(L)
    thr = float(norm_ppf(1.0 - alpha))
    inc = np.flatnonzero(T <= thr)
    if inc.size == 0:
        inc = np.array([int(np.argmin(L.mean(axis=0)))])
    return McsResult(tuple(int(i) for i in inc), tuple(float(t) for t in T), thr)


def _m_tilde(L):
    N = L.shape[0]
    T_pre, _ = _stats(L[: N // 2])
    level = N ** -0.5
    return max(1, int(np.sum(T_pre <= norm_ppf(1.0 - level))))


def da_mcs_unif(L, alpha=0.05, strict=True):
    """Confidence set covering all minimizers simultaneously.

    With ``strict=False`` matrices with 4 to 7 rows are accepted; the
    pre-screen is skipped and the full Bonferroni divisor ``M`` is used.
    """
    _check_alpha(alpha)
    L = check_loss_matrix(L, min_rows=8 if strict else 4)
    m_t = _m_tilde(L) if L.shape[0] >= 8 else L.shape[1]
    T, _ = _stats(L)
    thr = float(norm_ppf(1.0 - alpha / m_t))
    inc = np.flatnonzero(T <= thr)
    if inc.size == 0:
        inc = np.array([int(np.argmin(L.mean(axis=0)))])
    return McsResult(tuple(int(i) for i in inc), tuple(float(t) for t in T), thr, m_t)


# -- slow reference -----------------------------------------------------------

def _naive_stat(L, r):
    N, M = L.shape
    h = N // 2
    best, best_sum = None, None
    for m in range(M):
        if m == r:
            continue
        s = sum(L[i, m] for i in range(h))
        if best is None or s < best_sum:
            best, best_sum = m, s
    diffs = [L[i, r] - L[i, best] for i in range(h, N)]
    n2 = len(diffs)
    tot = sum(diffs)
    mean = tot / n2
    var = sum((x - mean) ** 2 for x in diffs) / (n2 - 1)
    sd = math.sqrt(var)
    if sd == 0.0 or sd <= 1e-12 * max(abs(x) for x in diffs):
        return -math.inf if tot <= 0 else math.inf
    return tot / math.sqrt(var * n2)


def naive_da_mcs(L, alpha=0.05, uniform=True):
    """Quadratic-cost reference for :func:`da_mcs_unif` / :func:`da_mcs_marg`."""
    L = np.asarray(L, dtype=float)
    N, M = L.shape
    m_t = None
    if uniform:
        pre = L[: N // 2]
        c = norm_ppf(1.0 - N ** -0.5)
        m_t = max(1, sum(_naive_stat(pre, r) <= c for r in range(M)))
        thr = float(norm_ppf(1.0 - alpha / m_t))
    else:
        thr = float(norm_ppf(1.0 - alpha))
    T = [_naive_stat(L, r) for r in range(M)]
    inc = [r for r in range(M) if T[r] <= thr]
    if not inc:
        inc = [int(np.argmin(L.mean(axis=0)))]
    return McsResult(tuple(inc), tuple(T), thr, m_t)


# -- CSV ------------------------------------------------------------------------

def read_loss_csv(path_or_text):
    """Read a loss matrix with a header row of model ids."""
    if isinstance(path_or_text, str) and "\n" not in path_or_text:
        try:
            with open(path_or_text, newline="") as fh:
                text = fh.read()
        except OSError as exc:
            raise DataError(f"cannot read {path_or_text}: {exc}") from None
    else:
        text = path_or_text
    rows = list(csv.reader(io.StringIO(text)))
    rows = [r for r in rows if r]
    if len(rows) < 2:
        raise DataError("loss CSV needs a header and at least one row")
    names = [c.strip() for c in rows[0]]
    try:
        L = np.array([[float(v) for v in r] for r in rows[1:]])
    except ValueError as exc:
        raise DataError(f"non-numeric loss entry: {exc}") from None
    if L.shape[1] != len(names):
        raise DataError("loss CSV rows and header differ in length")
    return names, L


def write_loss_csv(fh, names, L):
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(names)
    for row in np.asarray(L):
        w.writerow([repr(float(v)) for v in row])
