"""Simplified vine copula models on a fixed structure.

Values are propagated column-wise through the natural-order array. For
column ``e`` at tree level ``t`` the model keeps

* ``direct[t][e]``: the conditional distribution value of variable ``e``
  given the first ``t`` partners of its column, and
* ``indirect[t][e]``: the value of partner ``array[t-1][e]`` given
  ``e`` and the earlier partners.

``RVineStructure.sources`` says which of these feeds the second argument
of every edge.
"""
from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from . import bicop
from .bicop import INDEP, PairCopula
from .errors import DataError
from .marginals import KernelMarginal, pseudo_obs
from .structure import RVineStructure

__all__ = ["FitControls", "VineCopulaModel", "fit_vine", "simpson_weights"]

HEADER = "VINEMODEL v1"


@dataclass(frozen=True)
class FitControls:
    """Options shared by every vine fit.

    Parameters
    ----------
    family_set : tuple of str
        Pair-copula families considered on each edge.
    trunc_level : int or None
        Trees above this level are independence. ``None`` keeps all trees.
    pseudo_obs : {"rank", "kernel"}
        Transform used when fitting from data.
    grid_size : int
        Odd number of Simpson nodes for the conditional-density normalizer.
    jobs : int
        Worker budget for candidate-level parallelism.
    criterion : {"aic", "bic"}
    """

    family_set: tuple = bicop.DEFAULT_FAMILY_SET
    trunc_level: int | None = None
    pseudo_obs: str = "rank"
    grid_size: int = 101
    jobs: int = 1
    criterion: str = "aic"

    def __post_init__(self):
        object.__setattr__(self, "family_set", tuple(self.family_set))
        if self.trunc_level is not None and self.trunc_level < 1:
            raise ValueError("trunc_level must be at least 1")
        if self.grid_size < 3 or self.grid_size % 2 == 0:
            raise ValueError("grid_size must be odd and at least 3")


def simpson_weights(G):
    """Composite Simpson weights for ``G`` equally spaced nodes on [0, 1]."""
    if G < 3 or G % 2 == 0:
        raise ValueError("Simpson's rule needs an odd number of nodes >= 3")
    w = np.ones(G)
    w[1:-1:2] = 4.0
    w[2:-1:2] = 2.0
    return w / (3.0 * (G - 1))


def _check_u(u, d):
    u = np.asarray(u, dtype=float)
    if u.ndim == 1:
        u = u[None, :]
    if u.ndim != 2 or u.shape[1] != d:
        raise DataError(f"expected points with {d} coordinates, got shape {u.shape}")
    return np.clip(u, bicop.EPS, 1.0 - bicop.EPS)


def _propagate(structure, pcs, unat, edge_fn=None):
    """Walk the trees, returning the summed log-density per row.

    ``edge_fn(t, e, a, b)`` may return a fitted copula to use for the
    edge (fitting mode); otherwise ``pcs[t][e]`` is used.
    """
    d = structure.d
    n = unat.shape[0]
    src = structure.sources
    direct = [unat[:, e] for e in range(d)]
    indirect = [None] * d
    total = np.zeros(n)
    for t in range(structure.trunc_level):
        new_direct, new_indirect = list(direct), list(indirect)
        last = t == structure.trunc_level - 1
        for e in range(d - 1 - t):
            e2, own = src[t][e]
            a = direct[e]
            b = direct[e2] if own else indirect[e2]
            pc = edge_fn(t, e, a, b) if edge_fn is not None else pcs[t][e]
            if pc.is_indep:
                # h-functions of the independence copula are identities
                new_indirect[e] = b
                continue
            total += pc.logpdf(a, b)
            if not last:
                new_direct[e] = pc.hfunc2(a, b)
                new_indirect[e] = pc.hfunc1(a, b)
        direct, indirect = new_direct, new_indirect
    return total


class VineCopulaModel:
    """Structure, pair copulas and optional margins of a fitted vine.

    Parameters
    ----------
    structure : RVineStructure
    pair_copulas : sequence of sequences of PairCopula
        ``pair_copulas[t][e]`` for ``t < structure.trunc_level``.
    marginals : list of KernelMarginal, optional
        One per original variable, in original label order.
    columns : list of str, optional
    scale : tuple of arrays, optional
        ``(mean, sd)`` applied to raw data before the margins.
    """

    def __init__(self, structure, pair_copulas, marginals=None, columns=None,
                 scale=None, n_train=None, edge_loglik=None):
        self.structure = structure
        d = structure.d
        pcs = [list(row) for row in pair_copulas[: structure.trunc_level]]
        if len(pcs) != structure.trunc_level or any(
            len(row) != d - 1 - t for t, row in enumerate(pcs)
        ):
            raise ValueError("pair_copulas does not match the structure shape")
        self.pair_copulas = pcs
        self.marginals = marginals
        self.columns = list(columns) if columns is not None else None
        self.scale = None if scale is None else (np.asarray(scale[0], float), np.asarray(scale[1], float))
        self.n_train = n_train
        self.edge_loglik = edge_loglik

    @property
    def d(self):
        return self.structure.d

    @property
    def nparams(self):
        return sum(pc.nparams for row in self.pair_copulas for pc in row)

    @property
    def loglik(self):
        if self.edge_loglik is None:
            return None
        return float(sum(sum(row) for row in self.edge_loglik))

    @property
    def aic(self):
        ll = self.loglik
        return None if ll is None else -2.0 * ll + 2.0 * self.nparams

    def pair_copula(self, t, e):
        if t >= self.structure.trunc_level:
            return INDEP
        return self.pair_copulas[t][e]

    def with_marginals(self, marginals, columns=None, scale=None):
        return VineCopulaModel(self.structure, self.pair_copulas, marginals,
                               columns if columns is not None else self.columns,
                               scale if scale is not None else self.scale,
                               self.n_train, self.edge_loglik)

    # -- copula scale --------------------------------------------------------
    def _natural(self, u):
        return u[:, list(self.structure.order)]

    def logpdf(self, u):
        """Log copula density at points of the unit cube."""
        u = _check_u(u, self.d)
        return _propagate(self.structure, self.pair_copulas, self._natural(u))

    def pdf(self, u):
        return np.exp(self.logpdf(u))

    def conditional_logpdf(self, y, x=None, grid_size=101):
        """Copula-scale log density of coordinate 0 given the others.

        ``y`` holds coordinate 0 and ``x`` the remaining ``d - 1``; with
        ``x=None`` the first argument is taken as full points. The
        normalizer integrates the joint copula density over coordinate 0
        with Simpson's rule on ``grid_size`` nodes.
        """
        w = simpson_weights(grid_size)
        if x is None:
            u = _check_u(y, self.d)
        else:
            y = np.atleast_1d(np.asarray(y, dtype=float))
            x = np.asarray(x, dtype=float).reshape(y.size, self.d - 1)
            u = _check_u(np.column_stack([y, x]), self.d)
        n = u.shape[0]
        num = self.logpdf(u)
        grid = np.linspace(0.0, 1.0, grid_size)
        ug = np.repeat(u, grid_size, axis=0)
        ug[:, 0] = np.tile(grid, n)
        lg = self.logpdf(ug).reshape(n, grid_size)
        return num - logsumexp(lg, b=w[None, :], axis=1)

    def simulate(self, n, rng=None, w=None):
        """Draw ``n`` points by the inverse Rosenblatt transform.

        ``w`` may supply the ``(n, d)`` independent uniforms in natural
        order; column ``e`` is used for variable ``order[e]``.
        """
        rng = np.random.default_rng(rng)
        s = self.structure
        d, k_max = s.d, s.trunc_level
        if w is None:
            w = rng.random((n, d))
        w = np.asarray(w, dtype=float)
        src = s.sources
        # direct[e][t], indirect[e][t] for t = 0..levels of column e
        direct = [None] * d
        indirect = [None] * d
        direct[d - 1] = [w[:, d - 1]]
        indirect[d - 1] = [None]
        for e in range(d - 2, -1, -1):
            k = min(d - 1 - e, k_max)
            partners = []
            for t in range(k):
                e2, own = src[t][e]
                partners.append(direct[e2][t] if own else indirect[e2][t])
            col = [None] * (k + 1)
            col[k] = w[:, e]
            for t in range(k - 1, -1, -1):
                col[t] = self.pair_copulas[t][e].hinv2(col[t + 1], partners[t])
            ind = [None] * (k + 1)
            for t in range(k):
                ind[t + 1] = self.pair_copulas[t][e].hfunc1(col[t], partners[t])
            direct[e], indirect[e] = col, ind
        out = np.empty((n, d))
        for e in range(d):
            out[:, s.order[e]] = direct[e][0]
        return out

    # -- data scale ----------------------------------------------------------
    def _require_margins(self):
        if self.marginals is None:
            raise ValueError("model has no marginals")

    def standardize(self, X):
        X = np.asarray(X, dtype=float)
        if self.scale is None:
            return X
        return (X - self.scale[0]) / self.scale[1]

    def to_uniform(self, X):
        self._require_margins()
        return pseudo_obs(self.standardize(X), mode="kernel", marginals=self.marginals)

    def _log_jacobian(self, cols):
        if self.scale is None:
            return 0.0
        return -float(np.sum(np.log(self.scale[1][cols])))

    def data_logpdf(self, X):
        """Joint log density of raw data rows."""
        Z = self.standardize(X)
        u = pseudo_obs(Z, mode="kernel", marginals=self.marginals)
        lm = sum(m.logpdf(Z[:, j]) for j, m in enumerate(self.marginals))
        return self.logpdf(u) + lm + self._log_jacobian(slice(None))

    def data_conditional_logpdf(self, X, grid_size=101):
        """Log density of column 0 of raw rows given the other columns."""
        Z = self.standardize(X)
        u = pseudo_obs(Z, mode="kernel", marginals=self.marginals)
        lc = self.conditional_logpdf(u, grid_size=grid_size)
        return lc + self.marginals[0].logpdf(Z[:, 0]) + self._log_jacobian([0])

    # -- text ----------------------------------------------------------------
    def to_text(self):
        lines = [HEADER]
        if self.columns is not None:
            lines.append("COLUMNS " + json.dumps(self.columns))
        if self.scale is not None:
            lines.append("SCALE")
            lines.append(" ".join(repr(float(v)) for v in self.scale[0]))
            lines.append(" ".join(repr(float(v)) for v in self.scale[1]))
        lines.append("STRUCTURE")
        lines.extend(self.structure.to_text().splitlines())
        flat = [pc for row in self.pair_copulas for pc in row]
        lines.append(f"PAIRCOPULAS {len(flat)}")
        lines.extend(pc.to_text() for pc in flat)
        ms = self.marginals or []
        lines.append(f"MARGINALS {len(ms)}")
        for m in ms:
            lines.extend(m.to_text().splitlines())
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text):
        lines = [ln.strip() for ln in text.splitlines() if ln.strip()]
        if not lines or lines[0] != HEADER:
            raise DataError("not a model file (missing VINEMODEL v1 header)")
        i, columns, scale = 1, None, None
        try:
            if lines[i].startswith("COLUMNS "):
                columns = json.loads(lines[i][8:])
                i += 1
            if lines[i] == "SCALE":
                mean = np.array([float(v) for v in lines[i + 1].split()])
                sd = np.array([float(v) for v in lines[i + 2].split()])
                scale = (mean, sd)
                i += 3
            if lines[i] != "STRUCTURE":
                raise DataError("model file: expected STRUCTURE block")
            structure, used = RVineStructure._from_lines(lines[i + 1:])
            i += 1 + used
            tag, count = lines[i].split()
            if tag != "PAIRCOPULAS":
                raise DataError("model file: expected PAIRCOPULAS block")
            flat = [PairCopula.from_text(ln) for ln in lines[i + 1: i + 1 + int(count)]]
            i += 1 + int(count)
            tag, count = lines[i].split()
            if tag != "MARGINALS":
                raise DataError("model file: expected MARGINALS block")
            ms = [KernelMarginal.from_lines(lines[i + 1 + 2 * j: i + 3 + 2 * j]) for j in range(int(count))]
        except (IndexError, ValueError) as exc:
            if isinstance(exc, DataError):
                raise
            raise DataError(f"malformed model file: {exc}") from None
        d = structure.d
        rows, pos = [], 0
        for t in range(structure.trunc_level):
            rows.append(flat[pos: pos + d - 1 - t])
            pos += d - 1 - t
        if pos != len(flat):
            raise DataError("model file: pair-copula count does not match the structure")
        return cls(structure, rows, ms or None, columns, scale)

    def __repr__(self):
        return f"VineCopulaModel(d={self.d}, trunc_level={self.structure.trunc_level}, nparams={self.nparams})"


def fit_vine(U, structure, controls=None):
    """Fit all pair copulas of ``structure`` tree by tree.

    Parameters
    ----------
    U : (n, d) array of pseudo-observations in (0, 1)
    structure : RVineStructure
    controls : FitControls, optional

    Returns
    -------
    VineCopulaModel
    """
    controls = controls or FitControls()
    d = structure.d
    U = _check_u(U, d)
    if U.shape[0] < 10:
        raise DataError(f"need at least 10 observations to fit a vine, got {U.shape[0]}")
    if controls.trunc_level is not None and controls.trunc_level < structure.trunc_level:
        structure = structure.truncate(controls.trunc_level)
    pcs = [[INDEP] * (d - 1 - t) for t in range(structure.trunc_level)]
    ll = [[0.0] * (d - 1 - t) for t in range(structure.trunc_level)]

    def edge_fn(t, e, a, b):
        pc = bicop.fit(a, b, family_set=controls.family_set, criterion=controls.criterion)
        pcs[t][e] = pc
        ll[t][e] = pc.loglik(a, b)
        return pc

    _propagate(structure, pcs, U[:, list(structure.order)], edge_fn)
    return VineCopulaModel(structure, pcs, n_train=U.shape[0], edge_loglik=ll)
