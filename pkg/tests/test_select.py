import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.stats import kendalltau, norm

from vinesearch.bicop import PairCopula, tau_to_par
from vinesearch.errors import ConfigError, DataError
from vinesearch.select import (candidate_structure, dissmann_fit, dissmann_structure,
                               fit_candidates, instance_losses, kendall_tau, kendall_tau_matrix,
                               random_search, split_indices)
from vinesearch.structure import RVineStructure, dvine
from vinesearch.vinecop import FitControls, VineCopulaModel

from .helpers import random_model

GAUSS = ("gaussian",)


@pytest.mark.parametrize("y,tau", [([1, 2, 3], 1.0), ([3, 2, 1], -1.0), ([1, 3, 2], 1 / 3)])
def test_kendall_tau_examples(y, tau):
    U = np.column_stack([[1, 2, 3], y]).astype(float)
    assert kendall_tau_matrix(U)[0, 1] == pytest.approx(tau, abs=1e-15)


@given(st.lists(st.tuples(st.integers(0, 5), st.integers(0, 5)), min_size=2, max_size=40))
def test_kendall_tau_matches_tau_b(pairs):
    x, y = np.array(pairs, dtype=float).T
    ref = kendalltau(x, y).statistic
    got = kendall_tau(x, y)
    if np.isnan(ref):
        assert np.isnan(got) or got == 0.0
    else:
        assert got == pytest.approx(ref, abs=1e-12)


def test_kendall_tau_matrix_is_symmetric(rng):
    T = kendall_tau_matrix(rng.random((50, 4)))
    np.testing.assert_array_equal(T, T.T)
    np.testing.assert_array_equal(np.diag(T), 1.0)


def test_kendall_tau_matrix_needs_two_rows():
    with pytest.raises(DataError):
        kendall_tau_matrix(np.zeros((1, 3)))


def _tree1(s):
    return {lab.conditioned for lab in s.edges(0)}


def test_greedy_three_variable_tree():
    taus = {(0, 1): 0.6, (0, 2): 0.2, (1, 2): 0.5}
    R = np.eye(3)
    for (i, j), t in taus.items():
        R[i, j] = R[j, i] = np.sin(np.pi * t / 2)
    z = np.random.default_rng(0).multivariate_normal(np.zeros(3), R, size=3000)
    s = dissmann_structure(norm.cdf(z))
    assert _tree1(s) == {(0, 1), (1, 2)}


def test_greedy_two_variables(rng):
    m = dissmann_fit(rng.random((100, 2)), FitControls(family_set=GAUSS))
    assert m.structure == RVineStructure([0, 1], [[1]])


def test_greedy_recovers_dominant_path():
    path = [2, 0, 3, 1]
    hits = 0
    for seed in range(10):
        s = dvine(path)
        pcs = [[PairCopula("gaussian", np.sin(np.pi * (0.8 if t == 0 else 0.1) / 2))
                for _ in range(3 - t)] for t in range(3)]
        u = VineCopulaModel(s, pcs).simulate(1000, np.random.default_rng(seed))
        hits += _tree1(dissmann_structure(u, FitControls(family_set=GAUSS))) == _tree1(s)
    assert hits >= 8


def test_greedy_truncation(rng):
    m = random_model(5, 2)
    u = m.simulate(600, rng)
    f = dissmann_fit(u, FitControls(trunc_level=2, family_set=GAUSS))
    assert f.structure.trunc_level == 2
    assert all(f.pair_copula(t, e).is_indep for t in range(2, 4) for e in range(4 - t))


@pytest.mark.parametrize("n,eta", [(100, 0.25), (37, 0.3), (1000, 0.5)])
def test_split_sizes_and_determinism(n, eta):
    tr, va = split_indices(n, eta, 11)
    assert len(va) == int(np.floor(eta * n))
    assert not set(tr) & set(va)
    assert sorted(set(tr) | set(va)) == list(range(n))
    tr2, va2 = split_indices(n, eta, 11)
    np.testing.assert_array_equal(tr, tr2)
    np.testing.assert_array_equal(va, va2)
    assert not np.array_equal(va, split_indices(n, eta, 12)[1])


def test_split_rejects_bad_eta():
    with pytest.raises(ConfigError):
        split_indices(10, 1.0, 0)


def test_candidate_stream_is_scheduling_free():
    a = [candidate_structure(5, 3, k) for k in range(6)]
    b = [candidate_structure(5, 3, k) for k in reversed(range(6))][::-1]
    assert a == b


def test_single_candidate_is_returned(rng):
    Z = rng.normal(size=(200, 3))
    best, cands = random_search(Z, M=1, seed=4)
    assert cands.M == 1 and best == cands.structures[0]


def test_validation_too_small(rng):
    with pytest.raises(DataError):
        random_search(rng.normal(size=(20, 3)), eta=0.25, M=2)


def test_candidate_set_invariants(rng):
    Z = rng.normal(size=(300, 4)) @ np.array([[1, 0.5, 0, 0], [0, 1, 0.4, 0], [0, 0, 1, 0.3], [0, 0, 0, 1]])
    best, cands = random_search(Z, eta=0.25, M=6, seed=1, controls=FitControls(family_set=GAUSS))
    assert cands.losses.shape == (75, 6)
    assert np.all(np.isfinite(cands.losses))
    np.testing.assert_allclose(cands.mean_losses, cands.losses.mean(axis=0), atol=1e-12)
    assert np.all(cands.mean_losses[cands.best] <= cands.mean_losses)
    assert best == cands.structures[cands.best]


def test_conditional_losses_are_finite(rng):
    Z = rng.normal(size=(200, 3))
    Z[:3] = [[8, -8, 8], [-9, 9, -9], [0, 0, 0]]
    _, cands = random_search(Z, M=3, loss="conditional", seed=2,
                             controls=FitControls(family_set=GAUSS))
    assert np.all(np.isfinite(cands.losses))


def test_order_independence(rng):
    Z = rng.normal(size=(240, 4)) @ np.triu(np.full((4, 4), 0.5)) + rng.normal(size=(240, 4))
    structs = [candidate_structure(4, 9, k) for k in range(5)]
    perm = [3, 0, 4, 1, 2]
    c = FitControls(family_set=GAUSS)
    b1, c1 = random_search(Z, M=5, seed=9, controls=c, structures=structs)
    b2, c2 = random_search(Z, M=5, seed=9, controls=c, structures=[structs[i] for i in perm])
    np.testing.assert_array_equal(c1.losses[:, perm], c2.losses)
    assert b1 == b2


def test_planted_truth_is_selected():
    hits = 0
    for seed in range(10):
        truth = random_model(4, 100 + seed, tau_range=(0.5, 0.8))
        u = truth.simulate(4000, np.random.default_rng(seed))
        Z = norm.ppf(u)
        structs = [truth.structure] + [candidate_structure(4, seed, k) for k in range(9)]
        best, _ = random_search(Z, eta=0.25, seed=seed, structures=structs)
        hits += best.key == truth.structure.key
    assert hits >= 7
