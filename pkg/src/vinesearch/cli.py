"""Command-line interface.

Exit codes: 0 success, 2 configuration error, 3 data error, 4 numerical
failure.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
import warnings

import numpy as np

from . import __version__
from .benchmark import (predict_regression, random_vine, run_benchmark,
                        simulate_gaussian_margins)
from .bicop import FAMILIES, ParameterError
from .ensemble import DEFAULT_LEVELS, MixtureModel
from .errors import ConfigError, DataError, NumericError
from .mcs import da_mcs_marg, da_mcs_unif, read_loss_csv
from .pipeline import (SELECTORS, SearchConfig, fit_full, read_csv, read_model,
                       search_and_select, standardization, write_model)
from .structure import StructureError, simulate_uniform
from .vinecop import FitControls

__all__ = ["main", "build_parser"]


# -- helpers -----------------------------------------------------------------------

def _clean(obj):
    """Replace non-finite floats so the JSON stays strict."""
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if math.isfinite(x):
            return x
        return "nan" if math.isnan(x) else ("inf" if x > 0 else "-inf")
    if isinstance(obj, np.integer):
        return int(obj)
    return obj


def dump_json(obj):
    return json.dumps(_clean(obj), sort_keys=True, indent=2, allow_nan=False) + "\n"


def _write(path, text):
    if path in (None, "-"):
        sys.stdout.write(text)
    else:
        with open(path, "w") as fh:
            fh.write(text)


def _int_list(text, name):
    try:
        vals = [int(v) for v in str(text).split(",") if v.strip()]
    except ValueError:
        raise ConfigError(f"--{name} expects comma-separated integers, got {text!r}") from None
    if not vals:
        raise ConfigError(f"--{name} is empty")
    return vals


def _families(text):
    fams = tuple(f.strip().lower() for f in text.split(",") if f.strip())
    bad = [f for f in fams if f not in FAMILIES]
    if bad or not fams:
        raise ConfigError(f"unknown families {bad}; choose from {', '.join(FAMILIES)}")
    return fams


def _controls(args, d):
    if args.trunc is not None and not 1 <= args.trunc <= d - 1:
        raise ConfigError(f"--trunc must lie in 1..{d - 1}")
    if args.grid < 3 or args.grid % 2 == 0:
        raise ConfigError("--grid must be odd and at least 3")
    if args.jobs < 1:
        raise ConfigError("--jobs must be positive")
    return FitControls(family_set=_families(args.families), trunc_level=args.trunc,
                       grid_size=args.grid, jobs=args.jobs)


def _search_config(args, d, loss):
    return SearchConfig(eta=args.eta, M=args.M, alpha=args.alpha, selector=args.selector,
                        loss=loss, seed=args.seed, refit=args.refit,
                        controls=_controls(args, d))


def _target_first(columns, X, target):
    if target is None:
        raise ConfigError("--target is required")
    if target not in columns:
        raise DataError(f"target column {target!r} not found; columns are {columns}")
    j = columns.index(target)
    perm = [j] + [k for k in range(len(columns)) if k != j]
    return [columns[k] for k in perm], X[:, perm]


def _members(Z, sel, cfg, columns, scale):
    if cfg.refit:
        models = fit_full(Z, sel.structures, cfg.controls)
    else:
        models = sel.members
    return [m.with_marginals(m.marginals, columns=columns, scale=scale) for m in models]


def _write_predictions(path, pred, levels):
    names = ["mean"] + [f"q_{int(round(100 * t)):02d}" for t in levels]
    has_crps = "crps" in pred
    if has_crps:
        names.append("crps")
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(names)
    for i in range(pred["mean"].size):
        row = [pred["mean"][i], *pred["quantiles"][i]]
        if has_crps:
            row.append(pred["crps"][i])
        w.writerow([repr(float(v)) for v in row])
    _write(path, buf.getvalue())


def _fit_common(args, columns, X, loss):
    d = X.shape[1]
    if d < 2:
        raise DataError("need at least two columns")
    cfg = _search_config(args, d, loss)
    scale = standardization(X, columns)
    Z = (X - scale[0]) / scale[1]
    sel = search_and_select(Z, cfg)
    members = _members(Z, sel, cfg, columns, scale)
    report = {
        "command": args.command,
        "version": __version__,
        "config": {**cfg.as_dict(), "input": args.input, "target": getattr(args, "target", None)},
        "columns": columns,
        "search": sel.report(timings=args.timings),
        "n_members": len(members),
    }
    write_model(args.out + ".model", members)
    return report, members


# -- commands ---------------------------------------------------------------------

def cmd_fit_density(args):
    columns, X = read_csv(args.input)
    report, _ = _fit_common(args, columns, X, "joint")
    _write(args.out + ".json", dump_json(report))
    return 0


def cmd_fit_regress(args):
    columns, X = read_csv(args.input)
    columns, X = _target_first(columns, X, args.target)
    report, members = _fit_common(args, columns, X, "conditional")
    mm = MixtureModel(members)
    if args.test is not None:
        tcols, T = read_csv(args.test)
        tcols, T = _target_first(tcols, T, args.target)
        missing = [c for c in columns[1:] if c not in tcols]
        if missing:
            raise DataError(f"test file lacks columns {missing}")
        T = T[:, [tcols.index(c) for c in columns]]
    else:
        T = X
    pred = predict_regression(mm, T[:, 1:], T[:, 0], args.grid)
    _write_predictions(args.out + ".predictions.csv", pred, DEFAULT_LEVELS)
    report["predictions"] = {
        "rows": int(T.shape[0]),
        "rmse": float(np.sqrt(np.mean((pred["mean"] - T[:, 0]) ** 2))),
        "crps": float(np.mean(pred["crps"])),
    }
    _write(args.out + ".json", dump_json(report))
    return 0


def cmd_predict(args):
    if args.model is None:
        raise ConfigError("--model is required")
    mm = read_model(args.model)
    cols, X = read_csv(args.input)
    names = mm.lead.columns
    y = None
    if names is not None:
        missing = [c for c in names[1:] if c not in cols]
        if missing:
            raise DataError(f"input lacks feature columns {missing}")
        Xf = X[:, [cols.index(c) for c in names[1:]]]
        if names[0] in cols:
            y = X[:, cols.index(names[0])]
    else:
        if X.shape[1] == mm.d:
            y, Xf = X[:, 0], X[:, 1:]
        elif X.shape[1] == mm.d - 1:
            Xf = X
        else:
            raise DataError(f"expected {mm.d - 1} or {mm.d} columns, got {X.shape[1]}")
    pred = predict_regression(mm, Xf, y, args.grid)
    _write_predictions(args.out, pred, DEFAULT_LEVELS)
    return 0


def cmd_mcs(args):
    names, L = read_loss_csv(args.input)
    if args.variant == "marg":
        res = da_mcs_marg(L, args.alpha)
    else:
        res = da_mcs_unif(L, args.alpha, strict=False)
    out = res.to_dict()
    out["included_index"] = out["included"]
    out["included"] = [names[i] for i in res.included]
    out["models"] = names
    out["config"] = {"alpha": args.alpha, "variant": args.variant, "input": args.input}
    _write(args.out, dump_json(out))
    return 0


def cmd_benchmark(args):
    seeds = _int_list(args.seeds, "seeds") if args.seeds is not None else None
    if seeds is None:
        if args.seed is None:
            raise ConfigError("benchmark needs --seed or --seeds")
        seeds = [args.seed]
    Ms = _int_list(args.M_list, "M")
    if min(Ms) < 1:
        raise ConfigError("M values must be positive")
    if args.simulate is not None:
        d, n = _int_list(args.simulate, "simulate")
        data_seed = args.data_seed if args.data_seed is not None else seeds[0]
        X = simulate_gaussian_margins(random_vine(d, data_seed), n, data_seed)
        columns = [f"x{j}" for j in range(d)]
        task = "density"
        source = {"simulate": [d, n], "data_seed": data_seed}
    else:
        if args.input is None:
            raise ConfigError("benchmark needs --input or --simulate")
        columns, X = read_csv(args.input)
        source = {"input": args.input}
        task = "density"
        if args.target is not None:
            columns, X = _target_first(columns, X, args.target)
            task = "regression"
    methods = tuple(m.strip() for m in args.methods.split(","))
    bad = [m for m in methods if m not in ("dissmann", "rs-b", "rs-e")]
    if bad:
        raise ConfigError(f"unknown methods {bad}")
    controls = _controls(args, X.shape[1])
    config = {
        **source, "seeds": seeds, "M": Ms, "alpha": args.alpha, "eta": args.eta,
        "families": list(controls.family_set), "trunc": controls.trunc_level,
        "grid": controls.grid_size, "methods": list(methods), "target": args.target,
        "test_fraction": 0.2,
    }
    report, timing = run_benchmark(X, seeds, Ms, task, args.alpha, args.eta, controls,
                                   methods, config)
    report["columns"] = columns
    _write(args.out, dump_json(report))
    if args.timings:
        if args.out in (None, "-"):
            raise ConfigError("--timings needs --out")
        _write(args.out + ".timing.json", dump_json(timing))
    return 0


def cmd_simulate(args):
    rng_seed = 0 if args.seed is None else args.seed
    if args.kind == "structure":
        if args.d is None:
            raise ConfigError("simulate structure needs --d")
        s = simulate_uniform(args.d, np.random.default_rng(rng_seed), args.trunc)
        _write(args.out, s.to_text())
        return 0
    if args.model is None or args.n is None:
        raise ConfigError("simulate data needs --model and --n")
    mm = read_model(args.model)
    if mm.size != 1:
        raise ConfigError("simulate data expects a single-model file")
    m = mm.lead
    U = m.simulate(args.n, np.random.default_rng(rng_seed))
    if m.marginals is not None:
        Z = np.column_stack([mg.quantile(np.clip(U[:, j], 1e-9, 1 - 1e-9))
                             for j, mg in enumerate(m.marginals)])
        X = Z if m.scale is None else Z * m.scale[1] + m.scale[0]
    else:
        X = U
    names = m.columns or [f"x{j}" for j in range(m.d)]
    lines = [",".join(names)] + [",".join(repr(float(v)) for v in row) for row in X]
    _write(args.out, "\n".join(lines) + "\n")
    return 0


# -- parser ----------------------------------------------------------------------

def _common(p, fit=True):
    p.add_argument("--input", help="input CSV with a header row")
    p.add_argument("--eta", type=float, default=0.25, help="validation fraction")
    p.add_argument("--alpha", type=float, default=0.05, help="MCS level")
    p.add_argument("--families", default=",".join(FAMILIES), help="comma-separated families")
    p.add_argument("--trunc", type=int, default=None, help="truncation level")
    p.add_argument("--grid", type=int, default=101, help="odd grid size")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--timings", action="store_true", help="also record CPU times")
    if fit:
        p.add_argument("--M", type=int, default=50, help="number of candidates")
        p.add_argument("--selector", choices=SELECTORS, default="best")
        p.add_argument("--refit", dest="refit", action="store_true", default=True,
                       help="refit selected structures on all rows (default)")
        p.add_argument("--no-refit", dest="refit", action="store_false")
        p.add_argument("--out", required=True, help="output path prefix")


def build_parser():
    parser = argparse.ArgumentParser(prog="vinesearch", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("fit-density", help="random search for a joint density")
    _common(p)
    p.set_defaults(func=cmd_fit_density)

    p = sub.add_parser("fit-regress", help="random search for a conditional density")
    _common(p)
    p.add_argument("--target", help="response column")
    p.add_argument("--test", help="optional CSV to predict")
    p.set_defaults(func=cmd_fit_regress)

    p = sub.add_parser("predict", help="conditional mean and quantiles from a model file")
    p.add_argument("--model")
    p.add_argument("--input", required=True)
    p.add_argument("--grid", type=int, default=101)
    p.add_argument("--out", default="-")
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("mcs", help="model confidence set from a loss CSV")
    p.add_argument("--input", required=True)
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--variant", choices=("unif", "marg"), default="unif")
    p.add_argument("--out", default="-")
    p.set_defaults(func=cmd_mcs)

    p = sub.add_parser("benchmark", help="greedy baseline versus random search")
    _common(p, fit=False)
    p.add_argument("--M", dest="M_list", default="5,50", help="comma-separated candidate counts")
    p.add_argument("--seeds", help="comma-separated seeds (overrides --seed)")
    p.add_argument("--target", help="response column (regression task)")
    p.add_argument("--simulate", help="'d,n': use synthetic data instead of --input")
    p.add_argument("--data-seed", type=int, default=None)
    p.add_argument("--methods", default="dissmann,rs-b,rs-e")
    p.add_argument("--out", default="-")
    p.set_defaults(func=cmd_benchmark)

    p = sub.add_parser("simulate", help="draw a structure or data from a model")
    p.add_argument("kind", choices=("structure", "data"))
    p.add_argument("--d", type=int)
    p.add_argument("--trunc", type=int, default=None)
    p.add_argument("--model")
    p.add_argument("--n", type=int)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", default="-")
    p.set_defaults(func=cmd_simulate)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command in ("fit-density", "fit-regress"):
        if args.input is None:
            parser.error("--input is required")
        if args.seed is None:
            args.seed = 0
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            return args.func(args)
    except (ConfigError, ParameterError) as exc:
        print(f"vinesearch: configuration error: {exc}", file=sys.stderr)
        return 2
    except (DataError, StructureError) as exc:
        print(f"vinesearch: data error: {exc}", file=sys.stderr)
        return 3
    except (NumericError, FloatingPointError, np.linalg.LinAlgError) as exc:
        print(f"vinesearch: numerical failure: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
