import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.stats import multivariate_normal, norm

from vinesearch.bicop import INDEP, PairCopula, fit
from vinesearch.errors import DataError
from vinesearch.select import kendall_tau
from vinesearch.structure import dvine, simulate_uniform
from vinesearch.vinecop import FitControls, VineCopulaModel, fit_vine, simpson_weights

from .helpers import (corr_from_dvine_partials, gauss_cube_nodes, gaussian_copula_logpdf,
                      random_model, reference_logpdf)


def gaussian_dvine(partials):
    d = len(partials) + 1
    s = dvine(list(range(d)))
    pcs = [[PairCopula("gaussian", partials[t]) for _ in range(d - 1 - t)] for t in range(d - 1)]
    return VineCopulaModel(s, pcs)


def test_independence_vine_has_zero_log_density(rng):
    s = simulate_uniform(5, rng)
    m = VineCopulaModel(s, [[INDEP] * (4 - t) for t in range(4)])
    np.testing.assert_array_equal(m.logpdf(rng.random((30, 5))), 0.0)


def test_gaussian_vine_equals_gaussian_copula(rng):
    R = np.array([[1.0, 0.5, 0.3], [0.5, 1.0, 0.4], [0.3, 0.4, 1.0]])
    p02 = (R[0, 2] - R[0, 1] * R[1, 2]) / np.sqrt((1 - R[0, 1] ** 2) * (1 - R[1, 2] ** 2))
    m = VineCopulaModel(dvine([0, 1, 2]), [[PairCopula("gaussian", 0.5), PairCopula("gaussian", 0.4)],
                                           [PairCopula("gaussian", p02)]])
    u = rng.random((100, 3))
    np.testing.assert_allclose(m.logpdf(u), gaussian_copula_logpdf(u, R), atol=1e-8)


@pytest.mark.parametrize("d,seed", [(2, 0), (3, 1), (3, 2), (4, 3), (4, 4), (4, 5)])
def test_factorization_matches_reference_walker(d, seed):
    m = random_model(d, seed)
    u = np.random.default_rng(seed).random((50, d))
    np.testing.assert_allclose(m.logpdf(u), reference_logpdf(m, u), atol=1e-12)


@pytest.mark.parametrize("seed", [0, 1])
def test_density_integrates_to_one_d3(seed):
    m = random_model(3, seed, tau_range=(0.2, 0.5))
    pts, w = gauss_cube_nodes(3, 40)
    assert np.sum(m.pdf(pts) * w) == pytest.approx(1.0, abs=0.02)


def test_truncated_equals_independent_upper_trees(rng):
    m = random_model(5, 7)
    pcs = [row[:] for row in m.pair_copulas]
    for t in range(2, 4):
        pcs[t] = [INDEP] * len(pcs[t])
    full = VineCopulaModel(m.structure, pcs)
    trunc = VineCopulaModel(m.structure.truncate(2), pcs[:2])
    u = rng.random((40, 5))
    np.testing.assert_array_equal(full.logpdf(u), trunc.logpdf(u))


def test_simulate_independence_returns_raw_uniforms(rng):
    s = simulate_uniform(4, rng)
    m = VineCopulaModel(s, [[INDEP] * (3 - t) for t in range(3)])
    w = rng.random((25, 4))
    out = m.simulate(25, w=w)
    np.testing.assert_array_equal(out[:, list(s.order)], w)


def test_simulated_gaussian_tau():
    m = VineCopulaModel(dvine([0, 1]), [[PairCopula("gaussian", 0.8)]])
    x = m.simulate(100_000, np.random.default_rng(3))
    assert kendall_tau(x[:, 0], x[:, 1]) == pytest.approx(PairCopula("gaussian", 0.8).tau, abs=0.01)


def test_simulation_consistent_with_entropy():
    partials = [0.6, 0.4, 0.3]
    m = gaussian_dvine(partials)
    R = corr_from_dvine_partials(partials)
    x = m.simulate(100_000, np.random.default_rng(8))
    lp = m.logpdf(x)
    # a Gaussian copula has expected log density -0.5 * log det R
    expect = -0.5 * np.log(np.linalg.det(R))
    assert abs(lp.mean() - expect) <= 3 * lp.std(ddof=1) / np.sqrt(lp.size)


def test_fit_d2_is_pair_fit(rng):
    u = PairCopula("clayton", 2.0).simulate(500, rng)
    m = fit_vine(u, dvine([0, 1]))
    assert m.pair_copulas[0][0] == fit(u[:, 0], u[:, 1])


def test_fit_recovers_gaussian_dvine():
    m = gaussian_dvine([0.6, 0.4, 0.3])
    u = m.simulate(5000, np.random.default_rng(4))
    f = fit_vine(u, m.structure)
    for t in range(3):
        for a, b in zip(m.pair_copulas[t], f.pair_copulas[t]):
            assert b.tau == pytest.approx(a.tau, abs=0.05)
    assert f.loglik == pytest.approx(sum(sum(r) for r in f.edge_loglik))
    assert f.aic == pytest.approx(-2 * f.loglik + 2 * f.nparams)


def test_truncation_control(rng):
    m = gaussian_dvine([0.6, 0.4, 0.3])
    u = m.simulate(800, rng)
    f = fit_vine(u, m.structure, FitControls(trunc_level=1))
    assert f.structure.trunc_level == 1
    assert sum(not pc.is_indep for row in f.pair_copulas for pc in row) == 3
    assert f.pair_copula(2, 0).is_indep


def test_fit_rejects_small_samples(rng):
    with pytest.raises(DataError):
        fit_vine(rng.random((5, 3)), dvine([0, 1, 2]))


def test_dimension_mismatch(rng):
    m = gaussian_dvine([0.5])
    with pytest.raises(DataError):
        m.logpdf(rng.random((3, 3)))


def test_conditional_density_independence(rng):
    s = simulate_uniform(4, rng)
    m = VineCopulaModel(s, [[INDEP] * (3 - t) for t in range(3)])
    np.testing.assert_allclose(m.conditional_logpdf(rng.random((10, 4))), 0.0, atol=1e-14)


@pytest.mark.parametrize("G", [101, 1001])
def test_conditional_density_normalized_d2(G):
    # Simpson on the normalizer's own grid integrates the conditional exactly
    m = gaussian_dvine([0.5])
    y = np.linspace(0, 1, G)
    for x in (0.1, 0.5, 0.93):
        f = np.exp(m.conditional_logpdf(y, np.full((G, 1), x), grid_size=G))
        assert np.sum(f * simpson_weights(G)) == pytest.approx(1.0, abs=1e-3)


def test_conditional_density_against_gauss_legendre():
    m = gaussian_dvine([0.5])
    (pts, w) = gauss_cube_nodes(1, 200)
    for x in (0.1, 0.5, 0.93):
        f = np.exp(m.conditional_logpdf(pts[:, 0], np.full((pts.shape[0], 1), x), grid_size=1001))
        assert np.sum(f * w) == pytest.approx(1.0, abs=1e-3)


def test_conditional_density_d2_identity(rng):
    # with two variables the normalizer is the density of a uniform margin
    m = gaussian_dvine([0.5])
    u = rng.random((20, 2))
    np.testing.assert_allclose(m.conditional_logpdf(u, grid_size=10001), m.logpdf(u), atol=1e-3)


def test_conditional_density_requires_odd_grid(rng):
    with pytest.raises(ValueError):
        gaussian_dvine([0.5]).conditional_logpdf(rng.random((2, 2)), grid_size=100)


def test_model_text_round_trip(rng):
    from vinesearch.marginals import fit_marginal
    m = random_model(5, 3)
    x = rng.normal(size=(40, 5))
    m = m.with_marginals([fit_marginal(x[:, j]) for j in range(5)], columns=["a", "b c", "d", "e", "f"],
                         scale=(np.arange(5.0), np.ones(5) * 2))
    back = VineCopulaModel.from_text(m.to_text())
    assert back.to_text() == m.to_text()
    np.testing.assert_array_equal(back.data_logpdf(x), m.data_logpdf(x))


def test_model_text_errors():
    with pytest.raises(DataError):
        VineCopulaModel.from_text("nonsense\n")
    m = random_model(3, 1)
    bad = m.to_text().replace("PAIRCOPULAS 3", "PAIRCOPULAS 2")
    with pytest.raises(DataError):
        VineCopulaModel.from_text(bad)


@given(seed=st.integers(0, 10_000), pts=st.lists(st.tuples(*[st.floats(0, 1)] * 4), min_size=1, max_size=5))
def test_log_density_finite_on_clamped_inputs(seed, pts):
    m = random_model(4, seed)
    assert np.all(np.isfinite(m.logpdf(np.array(pts))))
