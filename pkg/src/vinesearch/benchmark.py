"""Seeded comparison of the greedy baseline, best-of-M random search
(RS-B) and MCS ensembles (RS-E) on density or regression tasks."""
from __future__ import annotations

import math
import time

import numpy as np

from .bicop import PairCopula, tau_to_par
from .ensemble import (DEFAULT_LEVELS, MixtureModel, PredictionGrid, conditional_weights,
                       crps_from_quantiles, predict_mean, weighted_quantile)
from .errors import ConfigError
from .marginals import pseudo_obs
from .mcs import da_mcs_unif
from .normal import norm_ppf
from .pipeline import standardization
from .select import (candidate_structure, dissmann_fit, fit_candidates, fit_margins,
                     split_indices)
from .structure import simulate_uniform
from .vinecop import FitControls, VineCopulaModel

__all__ = [
    "random_pair_copula",
    "random_vine",
    "simulate_gaussian_margins",
    "regression_grid",
    "predict_regression",
    "run_benchmark",
    "summarize",
]

_SYNTH_FAMILIES = ("gaussian", "clayton", "gumbel", "frank")


def random_pair_copula(rng, tau_range=(0.2, 0.7), families=_SYNTH_FAMILIES):
    fam = families[rng.integers(len(families))]
    tau = rng.uniform(*tau_range) * (1.0 if rng.random() < 0.5 else -1.0)
    rot = 0
    if fam in ("clayton", "gumbel"):
        rot = int(rng.choice((0, 180) if tau > 0 else (90, 270)))
    return PairCopula(fam, tau_to_par(fam, tau, rot), rot)


def random_vine(d, seed, tau_range=(0.2, 0.7), trunc_level=None):
    """Uniformly drawn structure with random parametric pair copulas."""
    rng = np.random.default_rng(np.random.SeedSequence([int(seed), 0x51D]))
    s = simulate_uniform(d, rng, trunc_level)
    pcs = [[random_pair_copula(rng, tau_range) for _ in range(d - 1 - t)]
           for t in range(s.trunc_level)]
    return VineCopulaModel(s, pcs)


def simulate_gaussian_margins(model, n, seed):
    """Draws from ``model`` mapped to standard normal margins."""
    u = model.simulate(n, np.random.default_rng(np.random.SeedSequence([int(seed), 0xDA7A])))
    return norm_ppf(u)


# -- regression prediction ---------------------------------------------------

def regression_grid(mm, size=101):
    """Response grid spanning the training values of the lead member."""
    lead = mm.lead
    y = lead.marginals[0].values
    if lead.scale is not None:
        y = y * lead.scale[1][0] + lead.scale[0][0]
    return PredictionGrid.from_training(y, size)


def predict_regression(mm, Xf, y=None, grid_size=101, levels=DEFAULT_LEVELS, crps_levels=101):
    """Conditional mean, quantiles and (given truth) CRPS for feature rows.

    Returns a dict with ``mean`` (n,), ``quantiles`` (n, len(levels)),
    ``median`` (n,) and, when ``y`` is given, ``crps`` (n,).
    """
    grid = regression_grid(mm, grid_size)
    w = conditional_weights(mm, Xf, grid)
    out = {
        "mean": predict_mean(w, grid),
        "quantiles": weighted_quantile(grid.points, w, levels),
        "median": weighted_quantile(grid.points, w, 0.5)[:, 0],
    }
    if y is not None:
        q = weighted_quantile(grid.points, w, np.linspace(0.0, 1.0, crps_levels))
        out["crps"] = np.atleast_1d(crps_from_quantiles(q, np.asarray(y, dtype=float)))
    return out


# -- benchmark loop ------------------------------------------------------------

def _metrics(mm, Xtest, task, grid_size):
    if task == "density":
        return {"nll": float(-np.mean(mm.data_logpdf(Xtest)))}
    y = Xtest[:, 0]
    pred = predict_regression(mm, Xtest[:, 1:], y, grid_size)
    return {
        "nll": float(-np.mean(mm.data_conditional_logpdf(Xtest, grid_size))),
        "rmse": float(np.sqrt(np.mean((pred["mean"] - y) ** 2))),
        "mae": float(np.mean(np.abs(pred["median"] - y))),
        "crps": float(np.mean(pred["crps"])),
    }


def _scaled(models, scale):
    return [m.with_marginals(m.marginals, scale=scale) for m in models]


def run_seed(X, seed, Ms, task="density", alpha=0.05, eta=0.25, test_frac=0.2,
             controls=None, methods=("dissmann", "rs-b", "rs-e")):
    """One replication; returns ``(metrics, timings, extras)`` keyed by method."""
    controls = controls or FitControls()
    loss = "joint" if task == "density" else "conditional"
    n, d = X.shape
    train, test = split_indices(n, test_frac, seed)
    scale = standardization(X[train])
    Z = (X[train] - scale[0]) / scale[1]
    Xtest = X[test]
    metrics, timings, extras = {}, {}, {}

    if "dissmann" in methods:
        t0 = time.process_time()
        margins = fit_margins(Z)
        U = pseudo_obs(Z, controls.pseudo_obs, margins if controls.pseudo_obs == "kernel" else None)
        base = dissmann_fit(U, controls).with_marginals(margins, scale=scale)
        t_fit = time.process_time() - t0
        t0 = time.process_time()
        metrics["dissmann"] = _metrics(MixtureModel([base]), Xtest, task, controls.grid_size)
        timings["dissmann"] = {"train": t_fit, "infer": time.process_time() - t0}

    if "rs-b" in methods or "rs-e" in methods:
        Mmax = max(Ms)
        tr2, val2 = split_indices(len(train), eta, seed)
        structures = [candidate_structure(d, seed, k, controls.trunc_level) for k in range(Mmax)]
        cands = fit_candidates(Z, structures, tr2, val2, controls, loss)
        for M in sorted(Ms):
            sub = cands.subset(M)
            fit_time = float(sum(sub.fit_seconds))
            if "rs-b" in methods:
                name = f"rs-b({M})"
                t0 = time.process_time()
                mm = MixtureModel(_scaled([sub.models[sub.best]], scale))
                metrics[name] = _metrics(mm, Xtest, task, controls.grid_size)
                timings[name] = {"train": fit_time, "infer": time.process_time() - t0}
            if "rs-e" in methods:
                name = f"rs-e({M})"
                t0 = time.process_time()
                idx = list(da_mcs_unif(sub.losses, alpha).included) if M > 1 else [0]
                t_sel = time.process_time() - t0
                t0 = time.process_time()
                mm = MixtureModel(_scaled([sub.models[i] for i in idx], scale))
                metrics[name] = _metrics(mm, Xtest, task, controls.grid_size)
                timings[name] = {"train": fit_time + t_sel, "infer": time.process_time() - t0}
                extras[name] = {"mcs_size": len(idx)}
    return metrics, timings, extras


def summarize(values):
    v = np.asarray(values, dtype=float)
    se = float(v.std(ddof=1) / math.sqrt(v.size)) if v.size > 1 else 0.0
    return {"mean": float(v.mean()), "se": se, "values": [float(x) for x in v]}


def run_benchmark(X, seeds, Ms, task="density", alpha=0.05, eta=0.25, controls=None,
                  methods=("dissmann", "rs-b", "rs-e"), config=None):
    """Run all seeds; returns ``(report, timing_report)``.

    The report is deterministic given the inputs; CPU times are kept in a
    separate dictionary.
    """
    if task not in ("density", "regression"):
        raise ConfigError(f"unknown task {task!r}")
    if not seeds:
        raise ConfigError("at least one seed is required")
    per_seed = [run_seed(X, s, Ms, task, alpha, eta, controls=controls, methods=methods)
                for s in seeds]
    names = list(per_seed[0][0])
    out_methods, out_times = {}, {}
    for name in names:
        mets = {k: summarize([ps[0][name][k] for ps in per_seed]) for k in per_seed[0][0][name]}
        if name in per_seed[0][2]:
            mets["mcs_size"] = summarize([ps[2][name]["mcs_size"] for ps in per_seed])
        out_methods[name] = mets
        out_times[name] = {
            "train_cpu": float(np.mean([ps[1][name]["train"] for ps in per_seed])),
            "infer_cpu": float(np.mean([ps[1][name]["infer"] for ps in per_seed])),
        }
    if "dissmann" in out_times:
        ref = out_times["dissmann"]
        for t in out_times.values():
            t["train_ratio"] = t["train_cpu"] / ref["train_cpu"] if ref["train_cpu"] > 0 else None
            t["infer_ratio"] = t["infer_cpu"] / ref["infer_cpu"] if ref["infer_cpu"] > 0 else None
    report = {
        "config": dict(config or {}),
        "task": task,
        "seeds": [int(s) for s in seeds],
        "M": sorted(int(m) for m in Ms),
        "n": int(X.shape[0]),
        "d": int(X.shape[1]),
        "methods": out_methods,
    }
    return report, {"methods": out_times}
