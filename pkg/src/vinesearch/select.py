"""Structure selection: greedy maximum-spanning-tree baseline and
hold-out random search over uniformly drawn structures."""
from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np
from joblib import Parallel, delayed

from . import _kernels
from .errors import ConfigError, DataError
from .marginals import KernelMarginal, pseudo_obs
from .structure import RVineStructure, StructureError, simulate_uniform
from .vinecop import FitControls, VineCopulaModel, _check_u, fit_vine
from . import bicop

__all__ = [
    "kendall_tau",
    "kendall_tau_matrix",
    "dissmann_structure",
    "dissmann_fit",
    "split_indices",
    "candidate_structure",
    "CandidateSet",
    "random_search",
    "LOSSES",
]

LOSSES = ("joint", "conditional")


def kendall_tau(x, y):
    """Kendall's tau-b in O(n log n)."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    p = np.lexsort((y, x))
    return float(_kernels.kendall_tau_sorted(np.ascontiguousarray(x[p]), np.ascontiguousarray(y[p])))


def kendall_tau_matrix(U):
    U = np.asarray(U, dtype=float)
    n, d = U.shape
    if n < 2:
        raise DataError("need at least two rows")
    out = np.eye(d)
    for j in range(d):
        for k in range(j + 1, d):
            out[j, k] = out[k, j] = kendall_tau(U[:, j], U[:, k])
    return out


# -- greedy MST ----------------------------------------------------------------

def _kruskal(n_nodes, candidates):
    """Maximum spanning tree.

    ``candidates`` are ``(weight, i, j)`` with ``i < j``; ordering is weight
    descending, then ``(i, j)`` ascending.
    """
    parent = list(range(n_nodes))

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    chosen = []
    for w, i, j in sorted(candidates, key=lambda c: (-c[0], c[1], c[2])):
        ri, rj = find(i), find(j)
        if ri != rj:
            parent[ri] = rj
            chosen.append((i, j))
            if len(chosen) == n_nodes - 1:
                break
    if len(chosen) != n_nodes - 1:
        raise StructureError("proximity graph is disconnected")
    return chosen


@dataclass
class _Node:
    full: frozenset
    ends: tuple = ()          # indices of the two nodes of the previous tree
    conditioned: tuple = ()
    values: dict = field(default_factory=dict)   # var -> u_{var | rest of full}


def _tree_sequence(U, controls):
    """Greedy trees as lists of (conditioned pair, conditioning set)."""
    n, d = U.shape
    trunc = d - 1 if controls.trunc_level is None else min(controls.trunc_level, d - 1)
    nodes = [_Node(frozenset([j]), values={j: U[:, j]}) for j in range(d)]
    trees = []
    for t in range(d - 1):
        fitting = t < trunc
        cands = []
        for i in range(len(nodes)):
            for j in range(i + 1, len(nodes)):
                a, b = nodes[i], nodes[j]
                if t > 0 and not set(a.ends) & set(b.ends):
                    continue
                w = 0.0
                if fitting:
                    x, y = _conditioned(a, b)
                    w = abs(kendall_tau(a.values[x], b.values[y]))
                cands.append((w, i, j))
        edges = _kruskal(len(nodes), cands)
        new_nodes = []
        tree = []
        for i, j in sorted(edges):
            a, b = nodes[i], nodes[j]
            x, y = _conditioned(a, b)
            node = _Node(a.full | b.full, (i, j), (x, y))
            if fitting and t < trunc - 1:
                ux, uy = a.values[x], b.values[y]
                pc = bicop.fit(ux, uy, family_set=controls.family_set, criterion=controls.criterion)
                node.values = {x: pc.hfunc2(ux, uy), y: pc.hfunc1(ux, uy)}
            new_nodes.append(node)
            tree.append(((x, y), a.full & b.full))
        trees.append(tree)
        nodes = new_nodes
    return trees, trunc


def _conditioned(a, b):
    (x,) = a.full - b.full
    (y,) = b.full - a.full
    return x, y


def _trees_to_structure(d, trees, trunc):
    """Natural-order array from a full tree sequence by peeling leaves."""
    remaining = [list(tr) for tr in trees]
    order, columns = [], []
    for e in range(d - 1):
        top = d - 2 - e
        (x, y), _ = remaining[top][0]
        # a conditioned variable of the top edge that is a leaf in every tree;
        # the smaller label is tried first so the result is canonical
        lo, hi = min(x, y), max(x, y)
        var = lo if _is_leaf(remaining, top, lo) else hi
        col = []
        for t in range(top + 1):
            hits = [k for k, (pair, _) in enumerate(remaining[t]) if var in pair]
            if len(hits) != 1:
                raise StructureError("tree sequence is not a regular vine", tree=t)
            pair, _ = remaining[t].pop(hits[0])
            col.append(pair[1] if pair[0] == var else pair[0])
        order.append(var)
        columns.append(col)
    (last,) = set(range(d)) - set(order)
    order.append(last)
    pos = {v: i for i, v in enumerate(order)}
    array = [[pos[columns[e][t]] for e in range(d - 1 - t)] for t in range(d - 1)]
    return RVineStructure(order, array, trunc)


def _is_leaf(trees, top, var):
    return all(sum(var in pair for pair, _ in trees[t]) == 1 for t in range(top + 1))


def dissmann_structure(U, controls=None):
    """Greedy structure: maximum spanning trees on absolute Kendall's tau."""
    controls = controls or FitControls()
    U = _check_u(U, np.asarray(U).shape[1])
    d = U.shape[1]
    if d == 2:
        return RVineStructure([0, 1], [[1]])
    trees, trunc = _tree_sequence(U, controls)
    return _trees_to_structure(d, trees, trunc)


def dissmann_fit(U, controls=None):
    """Select a structure greedily and fit its pair copulas."""
    controls = controls or FitControls()
    s = dissmann_structure(U, controls)
    return fit_vine(U, s, controls)


# -- hold-out random search ---------------------------------------------------

def split_indices(n, eta, seed):
    """Shuffled train/validation split with ``floor(eta * n)`` validation rows."""
    if not 0.0 < eta < 1.0:
        raise ConfigError("eta must lie in (0, 1)")
    perm = np.random.default_rng(np.random.SeedSequence([int(seed), 0xE7A])).permutation(n)
    n_val = int(np.floor(eta * n))
    return np.sort(perm[n_val:]), np.sort(perm[:n_val])


def candidate_structure(d, seed, k, trunc_level=None):
    """Candidate ``k`` of the stream for ``seed``; independent of scheduling."""
    rng = np.random.default_rng(np.random.SeedSequence([int(seed), int(k)]))
    return simulate_uniform(d, rng, trunc_level)


@dataclass
class CandidateSet:
    """Candidates fitted on a training split and scored on validation rows.

    Attributes
    ----------
    structures : list of RVineStructure
    models : list of VineCopulaModel
        Carry the training-split margins.
    losses : ndarray, shape (n_val, M)
    train, val : ndarray of int
    fit_seconds : list of float
        CPU time per candidate fit.
    """

    structures: list
    models: list
    losses: np.ndarray
    train: np.ndarray
    val: np.ndarray
    loss: str = "joint"
    fit_seconds: list = field(default_factory=list)

    @property
    def M(self):
        return len(self.models)

    @property
    def mean_losses(self):
        return self.losses.mean(axis=0)

    @property
    def best(self):
        # argmin takes the first (smallest-index) minimizer
        return int(np.argmin(self.mean_losses))

    def subset(self, M):
        """The first ``M`` candidates."""
        return CandidateSet(self.structures[:M], self.models[:M], self.losses[:, :M],
                            self.train, self.val, self.loss, self.fit_seconds[:M])

    def records(self, timings=False):
        out = []
        means = self.mean_losses
        for k, s in enumerate(self.structures):
            rec = {"index": k, "structure_text": s.to_text(), "mean_val_loss": float(means[k])}
            if timings:
                rec["fit_seconds"] = self.fit_seconds[k]
            out.append(rec)
        return out


def fit_margins(Z):
    return [KernelMarginal.fit(Z[:, j], j) for j in range(Z.shape[1])]


def instance_losses(model, Z, loss="joint", grid_size=101):
    """Per-row negative log-likelihood of ``Z`` (model scale data)."""
    if loss == "joint":
        return -model.data_logpdf(Z)
    if loss == "conditional":
        return -model.data_conditional_logpdf(Z, grid_size=grid_size)
    raise ConfigError(f"unknown loss {loss!r}; choose from {LOSSES}")


def _fit_candidate(s, U_train, margins, Z_val, controls, loss):
    t0 = time.process_time()
    m = fit_vine(U_train, s, controls).with_marginals(margins)
    secs = time.process_time() - t0
    return m, instance_losses(m, Z_val, loss, controls.grid_size), secs


def fit_candidates(Z, structures, train, val, controls=None, loss="joint", margins=None):
    """Fit ``structures`` on ``Z[train]`` and score them on ``Z[val]``."""
    controls = controls or FitControls()
    Zt, Zv = Z[train], Z[val]
    if margins is None:
        margins = fit_margins(Zt)
    U = pseudo_obs(Zt, controls.pseudo_obs, margins if controls.pseudo_obs == "kernel" else None)
    jobs = [delayed(_fit_candidate)(s, U, margins, Zv, controls, loss) for s in structures]
    if controls.jobs == 1 or len(jobs) == 1:
        out = [f(*a, **kw) for f, a, kw in jobs]
    else:
        out = Parallel(n_jobs=controls.jobs)(jobs)
    models = [o[0] for o in out]
    losses = np.column_stack([o[1] for o in out])
    if not np.all(np.isfinite(losses)):
        raise DataError("non-finite validation losses")
    return CandidateSet(list(structures), models, losses, train, val, loss, [o[2] for o in out])


def random_search(Z, eta=0.25, M=50, loss="joint", seed=0, controls=None, structures=None,
                  split=None):
    """Hold-out random search over uniformly drawn structures.

    Parameters
    ----------
    Z : (n, d) array
        Data in model scale (already standardized if desired).
    eta : float
        Validation fraction.
    M : int
        Number of random candidates; ignored when ``structures`` is given.
    loss : {"joint", "conditional"}
        Negative joint log-density, or negative log-density of column 0
        given the rest.
    seed : int
    controls : FitControls, optional
    structures : list of RVineStructure, optional
        Explicit candidate list.
    split : tuple of index arrays, optional
        Precomputed ``(train, val)``.

    Returns
    -------
    best : RVineStructure
    cands : CandidateSet
    """
    controls = controls or FitControls()
    Z = np.asarray(Z, dtype=float)
    n, d = Z.shape
    if structures is None:
        if M < 1:
            raise ConfigError("M must be at least 1")
        structures = [candidate_structure(d, seed, k, controls.trunc_level) for k in range(M)]
    train, val = split if split is not None else split_indices(n, eta, seed)
    if len(val) < 8:
        raise DataError(f"validation split has {len(val)} rows, need at least 8")
    cands = fit_candidates(Z, structures, train, val, controls, loss)
    return cands.structures[cands.best], cands
