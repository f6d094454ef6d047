"""End-to-end acceptance checks, one test per criterion.

Each test prints a single PASS/FAIL line (visible with or without ``-s``)
and asserts both the quantitative target and its runtime limit.
"""
import json
import time
from collections import Counter

import numpy as np
import pytest
from scipy.stats import chisquare, norm

from vinesearch.benchmark import random_vine, run_benchmark, simulate_gaussian_margins
from vinesearch.bicop import PairCopula
from vinesearch.cli import main
from vinesearch.ensemble import crps_from_quantiles
from vinesearch.mcs import da_mcs_marg, da_mcs_unif, da_test_stat, naive_da_mcs
from vinesearch.structure import dvine, enumerate_all, simulate_uniform
from vinesearch.vinecop import VineCopulaModel, fit_vine

from .helpers import gauss_cube_nodes, gaussian_copula_logpdf


@pytest.fixture
def verdict(capsys):
    def say(num, ok, detail, seconds, limit):
        ok = bool(ok) and seconds < limit
        with capsys.disabled():
            print(f"\ncriterion {num}: {'PASS' if ok else 'FAIL'} | {detail} | {seconds:.1f}s (limit {limit}s)")
        return ok
    return say


def test_criterion_01_structure_counts(verdict):
    t0 = time.perf_counter()
    counts = {d: len(enumerate_all(d)) for d in (3, 4, 5)}
    rng = np.random.default_rng(0)
    keys = [s.key for s in enumerate_all(3)]
    freq = Counter(simulate_uniform(3, rng).key for _ in range(3000))
    p = chisquare([freq[k] for k in keys]).pvalue
    ok = counts == {3: 3, 4: 24, 5: 480} and p > 0.001 and sum(freq.values()) == 3000
    assert verdict(1, ok, f"counts {counts}, chi-square p = {p:.3f}", time.perf_counter() - t0, 10)


def test_criterion_02_gaussian_equivalence(verdict):
    t0 = time.perf_counter()
    R = np.array([[1.0, 0.5, 0.3], [0.5, 1.0, 0.4], [0.3, 0.4, 1.0]])
    p02 = (R[0, 2] - R[0, 1] * R[1, 2]) / np.sqrt((1 - R[0, 1] ** 2) * (1 - R[1, 2] ** 2))
    m = VineCopulaModel(dvine([0, 1, 2]), [[PairCopula("gaussian", R[0, 1]), PairCopula("gaussian", R[1, 2])],
                                           [PairCopula("gaussian", p02)]])
    u = np.random.default_rng(1).random((100, 3))
    err = float(np.max(np.abs(m.logpdf(u) - gaussian_copula_logpdf(u, R))))
    assert verdict(2, err <= 1e-8, f"max abs error {err:.2e}", time.perf_counter() - t0, 1)


def test_criterion_03_density_normalization(verdict):
    t0 = time.perf_counter()
    totals = []
    for d, k in ((2, 200), (3, 48)):
        for seed in (0, 1):
            truth = random_vine(d, seed)
            u = truth.simulate(1000, np.random.default_rng(seed))
            fitted = fit_vine(u, truth.structure)
            pts, w = gauss_cube_nodes(d, k)
            totals.append(float(np.sum(fitted.pdf(pts) * w)))
    ok = all(abs(t - 1) <= 0.02 for t in totals)
    assert verdict(3, ok, "integrals " + ", ".join(f"{t:.4f}" for t in totals),
                   time.perf_counter() - t0, 60)


def test_criterion_04_round_trip(verdict):
    t0 = time.perf_counter()
    truth = random_vine(4, 2024)
    good, worst = 0, []
    for seed in range(10):
        u = truth.simulate(5000, np.random.default_rng(seed))
        f = fit_vine(u, truth.structure)
        dev = max(abs(f.pair_copula(t, e).tau - truth.pair_copula(t, e).tau)
                  for t in range(3) for e in range(3 - t))
        worst.append(dev)
        good += dev <= 0.05
    assert verdict(4, good >= 9, f"{good}/10 seeds within 0.05 (max dev {max(worst):.3f})",
                   time.perf_counter() - t0, 60)


def test_criterion_05_da_exactness(verdict):
    t0 = time.perf_counter()
    L = np.array([[0, 1], [0, 1], [1, 2], [1, 4]], dtype=float)
    hand = (da_test_stat(L, 0), da_test_stat(L, 1))
    rng = np.random.default_rng(5)
    same = 0
    for _ in range(200):
        N, M = int(rng.integers(8, 65)), int(rng.integers(2, 17))
        X = rng.normal(size=(N, M)) + 0.2 * rng.normal(size=M)
        same += (da_mcs_unif(X).included == naive_da_mcs(X, uniform=True).included
                 and da_mcs_marg(X).included == naive_da_mcs(X, uniform=False).included)
    ok = hand == (-2.0, 2.0) and same == 200
    assert verdict(5, ok, f"T = {hand}, {same}/200 identical to reference", time.perf_counter() - t0, 10)


def test_criterion_06_mcs_coverage(verdict):
    t0 = time.perf_counter()
    N, M, reps = 2000, 20, 500
    mu = np.concatenate([np.zeros(3), np.linspace(0.1, 1.0, M - 3)])
    star = [0, 1, 2]
    unif_cover, marg_hits = 0, np.zeros(3)
    for rep in range(reps):
        L = mu + np.random.default_rng(rep).normal(size=(N, M))
        inc_u = set(da_mcs_unif(L, 0.05).included)
        inc_m = set(da_mcs_marg(L, 0.05).included)
        unif_cover += set(star) <= inc_u
        marg_hits += [m in inc_m for m in star]
    cu, cm = unif_cover / reps, float(marg_hits.min() / reps)
    ok = cu >= 0.93 and cm >= 0.93
    assert verdict(6, ok, f"simultaneous coverage {cu:.3f}, worst marginal inclusion {cm:.3f}",
                   time.perf_counter() - t0, 120)


def test_criterion_07_mcs_scaling(verdict):
    t0 = time.perf_counter()
    rng = np.random.default_rng(7)
    L = {M: rng.normal(size=(4096, M)) for M in (256, 512)}

    def wall(M):
        ts = []
        for _ in range(7):
            s = time.perf_counter()
            da_mcs_unif(L[M])
            ts.append(time.perf_counter() - s)
        return float(np.median(ts))

    wall(256)  # warm-up
    ratio = wall(512) / wall(256)
    assert verdict(7, ratio <= 3, f"time ratio M 512/256 = {ratio:.2f}", time.perf_counter() - t0, 60)


@pytest.mark.slow
def test_criterion_08_random_search_direction(verdict):
    t0 = time.perf_counter()
    X = simulate_gaussian_margins(random_vine(6, 0), 2000, 0)
    rep, _ = run_benchmark(X, list(range(10)), [5, 50, 200], methods=("dissmann", "rs-b", "rs-e"))
    meth = rep["methods"]

    def ll(name):
        v = -np.asarray(meth[name]["nll"]["values"])
        return float(np.median(v)), float(meth[name]["nll"]["se"]), float(v.mean())

    steps = []
    for a, b in ((5, 50), (50, 200)):
        (ma, sa, _), (mb, _, _) = ll(f"rs-b({a})"), ll(f"rs-b({b})")
        steps.append(mb >= ma - sa)
    _, sd, mean_d = ll("dissmann")
    _, _, mean_50 = ll("rs-b(50)")
    beats = mean_50 >= mean_d - sd
    curve = ", ".join(f"M={M}: {ll(f'rs-b({M})')[0]:.3f}" for M in (5, 50, 200))
    ens = ", ".join(f"M={M}: {ll(f'rs-e({M})')[0]:.3f}" for M in (5, 50, 200))
    detail = (f"median test loglik RS-B {curve}; RS-E {ens}; monotone {all(steps)}; "
              f"RS-B(50) mean {mean_50:.3f} vs dissmann {mean_d:.3f} - SE {sd:.3f} -> {beats}")
    assert verdict(8, all(steps) and beats, detail, time.perf_counter() - t0, 1800)


def test_criterion_09_regression(verdict, tmp_path):
    t0 = time.perf_counter()
    rng = np.random.default_rng(9)
    n, sigma = 4000, 1.0
    x = rng.normal(size=(n, 2))
    y = x[:, 0] + x[:, 1] + sigma * rng.normal(size=n)
    data = np.column_stack([y, x])
    cut = int(0.8 * n)
    for name, rows in (("train", data[:cut]), ("test", data[cut:])):
        np.savetxt(tmp_path / f"{name}.csv", rows, delimiter=",", header="y,x1,x2", comments="")
    rc = main(["fit-regress", "--input", str(tmp_path / "train.csv"), "--test", str(tmp_path / "test.csv"),
               "--target", "y", "--M", "50", "--alpha", "0.05", "--selector", "mcs-unif",
               "--seed", "0", "--out", str(tmp_path / "fit")])
    rep = json.loads((tmp_path / "fit.json").read_text())
    rmse = rep["predictions"]["rmse"]
    unif = np.linspace(0, 1, 101)
    crps = (crps_from_quantiles(np.full(101, 0.3), 0.3), crps_from_quantiles(unif, 0.0),
            crps_from_quantiles(unif, 0.5))
    crps_ok = all(abs(a - b) <= 1e-3 for a, b in zip(crps, (0.0, 1 / 3, 1 / 12)))
    ok = rc == 0 and abs(rmse / sigma - 1) <= 0.15 and crps_ok
    detail = (f"RMSE {rmse:.4f} vs Bayes {sigma} ({rep['n_members']} members); "
              f"CRPS {crps[0]:.4f}, {crps[1]:.4f}, {crps[2]:.4f}")
    assert verdict(9, ok, detail, time.perf_counter() - t0, 600)


def test_criterion_10_determinism(verdict, tmp_path):
    t0 = time.perf_counter()
    args = ["benchmark", "--simulate", "4,400", "--seeds", "0,1", "--M", "1,5",
            "--families", "gaussian,clayton,frank"]
    rcs = [main(args + ["--out", str(tmp_path / f"{k}.json")]) for k in "ab"]
    same = (tmp_path / "a.json").read_bytes() == (tmp_path / "b.json").read_bytes()
    ok = rcs == [0, 0] and same
    assert verdict(10, ok, f"byte-identical reports: {same}", time.perf_counter() - t0, 120)
