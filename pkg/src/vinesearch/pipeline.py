"""Search, select and refit: the workflow shared by the CLI and benchmarks."""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field

import numpy as np

from .ensemble import MixtureModel
from .errors import ConfigError, DataError
from .marginals import pseudo_obs
from .mcs import da_mcs_marg, da_mcs_unif
from .select import (LOSSES, CandidateSet, dissmann_fit, fit_margins, instance_losses,
                     random_search)
from .vinecop import FitControls, VineCopulaModel, fit_vine

__all__ = [
    "SELECTORS",
    "SearchConfig",
    "Selection",
    "read_csv",
    "standardization",
    "search_and_select",
    "fit_full",
    "read_model",
    "write_model",
]

SELECTORS = ("best", "mcs-marg", "mcs-unif", "better-than-dissmann")


def read_csv(path):
    """Numeric CSV with a header row; returns ``(columns, X)``."""
    try:
        with open(path, newline="") as fh:
            text = fh.read()
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from None
    rows = [r for r in csv.reader(io.StringIO(text)) if r]
    if len(rows) < 2:
        raise DataError(f"{path}: need a header and at least one data row")
    cols = [c.strip() for c in rows[0]]
    X = np.empty((len(rows) - 1, len(cols)))
    for i, r in enumerate(rows[1:]):
        if len(r) != len(cols):
            raise DataError(f"{path}: row {i + 1} has {len(r)} fields, expected {len(cols)}")
        for j, v in enumerate(r):
            try:
                X[i, j] = float(v)
            except ValueError:
                raise DataError(f"{path}: non-numeric value {v!r} at row {i + 1}, column {cols[j]!r}") from None
    bad = np.argwhere(~np.isfinite(X))
    if bad.size:
        i, j = bad[0]
        raise DataError(f"{path}: missing value at row {i + 1}, column {cols[j]!r}")
    return cols, X


def standardization(X, columns=None):
    """Column means and standard deviations; constant columns are rejected."""
    X = np.asarray(X, dtype=float)
    mean = X.mean(axis=0)
    sd = X.std(axis=0, ddof=1)
    for j in np.flatnonzero(~(sd > 0.0)):
        name = columns[j] if columns is not None else j
        raise DataError(f"column {name!r} is constant")
    return mean, sd


@dataclass(frozen=True)
class SearchConfig:
    """Random-search and selection options."""

    eta: float = 0.25
    M: int = 50
    alpha: float = 0.05
    selector: str = "best"
    loss: str = "joint"
    seed: int = 0
    refit: bool = True
    controls: FitControls = field(default_factory=FitControls)

    def __post_init__(self):
        if self.selector not in SELECTORS:
            raise ConfigError(f"unknown selector {self.selector!r}; choose from {SELECTORS}")
        if self.loss not in LOSSES:
            raise ConfigError(f"unknown loss {self.loss!r}")
        if not 0.0 < self.eta < 1.0:
            raise ConfigError("eta must lie in (0, 1)")
        if self.M < 1:
            raise ConfigError("M must be at least 1")
        if not 0.0 < self.alpha <= 0.5:
            raise ConfigError("alpha must lie in (0, 0.5]")

    def as_dict(self):
        c = self.controls
        return {
            "eta": self.eta, "M": self.M, "alpha": self.alpha, "selector": self.selector,
            "loss": self.loss, "seed": self.seed, "refit": self.refit,
            "families": list(c.family_set), "trunc": c.trunc_level, "grid": c.grid_size,
            "pseudo_obs": c.pseudo_obs, "criterion": c.criterion,
        }


@dataclass
class Selection:
    """Outcome of search plus selection.

    ``members`` are train-split models (before any refit); ``structures``
    are their structures; ``indices`` refer to candidate columns, with
    ``-1`` denoting the greedy baseline.
    """

    cands: CandidateSet
    indices: list
    members: list
    mcs: object = None
    baseline: VineCopulaModel | None = None
    baseline_losses: np.ndarray | None = None
    benchmark_in_set: bool | None = None

    @property
    def structures(self):
        return [m.structure for m in self.members]

    def report(self, timings=False):
        out = {
            "candidates": self.cands.records(timings),
            "best_index": self.cands.best,
            "selected": list(self.indices),
            "n_train": int(len(self.cands.train)),
            "n_val": int(len(self.cands.val)),
        }
        if self.mcs is not None:
            out["mcs"] = self.mcs.to_dict()
        if self.baseline is not None:
            out["baseline"] = {
                "structure_text": self.baseline.structure.to_text(),
                "mean_val_loss": float(self.baseline_losses.mean()),
                "benchmark_in_set": bool(self.benchmark_in_set),
            }
        return out


def _baseline(Z, cands, controls, loss):
    Zt = Z[cands.train]
    margins = cands.models[0].marginals
    U = pseudo_obs(Zt, controls.pseudo_obs, margins if controls.pseudo_obs == "kernel" else None)
    model = dissmann_fit(U, controls).with_marginals(margins)
    return model, instance_losses(model, Z[cands.val], loss, controls.grid_size)


def select(Z, cands, cfg):
    """Apply ``cfg.selector`` to a fitted candidate set."""
    L = cands.losses
    if cfg.selector == "best":
        idx = [cands.best]
        return Selection(cands, idx, [cands.models[i] for i in idx])
    if cfg.selector in ("mcs-marg", "mcs-unif"):
        if cands.M == 1:
            return Selection(cands, [0], [cands.models[0]])
        res = (da_mcs_marg if cfg.selector == "mcs-marg" else da_mcs_unif)(L, cfg.alpha)
        idx = list(res.included)
        return Selection(cands, idx, [cands.models[i] for i in idx], mcs=res)
    # better-than-dissmann
    base, bl = _baseline(Z, cands, cfg.controls, cfg.loss)
    aug = np.column_stack([L, bl])
    res = da_mcs_unif(aug, cfg.alpha)
    in_set = (aug.shape[1] - 1) in res.included
    means = cands.mean_losses
    idx = [int(i) for i in np.flatnonzero(means < bl.mean())]
    members = [cands.models[i] for i in idx]
    if not idx:
        idx, members = [-1], [base]
    return Selection(cands, idx, members, mcs=res, baseline=base, baseline_losses=bl,
                     benchmark_in_set=in_set)


def search_and_select(Z, cfg, structures=None):
    _, cands = random_search(Z, cfg.eta, cfg.M, cfg.loss, cfg.seed, cfg.controls, structures)
    return select(Z, cands, cfg)


def fit_full(Z, structures, controls, margins=None):
    """Refit ``structures`` on all rows of ``Z`` with margins from ``Z``."""
    margins = margins if margins is not None else fit_margins(Z)
    U = pseudo_obs(Z, controls.pseudo_obs, margins if controls.pseudo_obs == "kernel" else None)
    return [fit_vine(U, s, controls).with_marginals(margins) for s in structures]


# -- model files with one or more members ---------------------------------------

MIXTURE_HEADER = "VINEMIXTURE v1"


def write_model(path, members):
    text = "".join(m.to_text() for m in members)
    with open(path, "w") as fh:
        if len(members) > 1:
            fh.write(f"{MIXTURE_HEADER} {len(members)}\n")
        fh.write(text)


def read_model(path):
    """Load a single model or a mixture as a :class:`MixtureModel`."""
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from None
    lines = text.splitlines()
    if lines and lines[0].startswith(MIXTURE_HEADER):
        k = int(lines[0].split()[-1])
        blocks, cur = [], None
        for ln in lines[1:]:
            if ln.strip() == "VINEMODEL v1":
                cur = [ln]
                blocks.append(cur)
            elif cur is not None:
                cur.append(ln)
        if len(blocks) != k:
            raise DataError(f"{path}: expected {k} models, found {len(blocks)}")
        members = [VineCopulaModel.from_text("\n".join(b)) for b in blocks]
    else:
        members = [VineCopulaModel.from_text(text)]
    return MixtureModel(members)
