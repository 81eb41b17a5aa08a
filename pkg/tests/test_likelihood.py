import math

import numpy as np
import pytest
from scipy import stats

from gridcop.copula import GridCopula, grid_division
from gridcop.errors import DimensionMismatch, DomainError, ValidationError
from gridcop.exchange import ExchangeProposal, ExchangeSite, apply_exchange, random_exchange, random_walk
from gridcop.grid import uniform_grid
from gridcop.likelihood import (
    Dataset,
    GaussianMarginal,
    KnownMarginal,
    cell_counts,
    copula_log_likelihood,
    delta_log_likelihood,
    marginal_log_likelihood,
    pseudo_observations,
)

FULL = ExchangeSite(0, 1, (), 0, 1, 0, 1)


def test_dataset_validation():
    with pytest.raises(ValidationError):
        Dataset([[0.1, np.nan]])
    with pytest.raises(ValidationError):
        Dataset([1.0, 2.0, 3.0])
    assert Dataset(np.zeros((0, 3))).n == 0


def test_pseudo_observations():
    d = Dataset([[0.0, 0.0]])
    np.testing.assert_allclose(pseudo_observations(d, [KnownMarginal.normal()] * 2), [[0.5, 0.5]])
    u = np.random.default_rng(0).random((20, 2))
    np.testing.assert_array_equal(pseudo_observations(Dataset(u), [KnownMarginal.uniform()] * 2), u)
    mix = KnownMarginal.normal_mixture()
    assert pseudo_observations(Dataset([[0.0, 0.0]]), [mix, mix])[0, 0] == pytest.approx(0.5)
    with pytest.raises(DimensionMismatch):
        pseudo_observations(d, [KnownMarginal.normal()])


def test_pseudo_observations_outside_unit_interval():
    bad = KnownMarginal("bad", lambda y: y + 2.0, lambda y: 0.0 * y)
    with pytest.raises(DomainError):
        pseudo_observations(Dataset([[0.0, 0.0]]), [bad, bad])


def test_marginal_densities_match_scipy():
    y = np.linspace(-3, 3, 13)
    np.testing.assert_allclose(KnownMarginal.normal(1.0, 2.0).logpdf(y), stats.norm.logpdf(y, 1.0, 2.0), atol=1e-13)
    mix = 0.5 * stats.norm.pdf(y, 1) + 0.5 * stats.norm.pdf(y, -1)
    np.testing.assert_allclose(KnownMarginal.normal_mixture().logpdf(y), np.log(mix), atol=1e-13)
    gm = GaussianMarginal(0.5, 1.5)
    np.testing.assert_allclose(gm.logpdf(y), stats.norm.logpdf(y, 0.5, 1.5), atol=1e-13)
    np.testing.assert_allclose(gm.cdf(y), stats.norm.cdf(y, 0.5, 1.5), atol=1e-15)


def test_quantile_table():
    m = KnownMarginal.quantile_table([0, 1, 3], [0, 0.5, 1])
    np.testing.assert_allclose(m.cdf([0.5, 2.0]), [0.25, 0.75])
    np.testing.assert_allclose(m.logpdf([0.5, 2.0]), np.log([0.5, 0.25]))
    with pytest.raises(ValidationError):
        KnownMarginal.quantile_table([0, 1], [0.1, 1])


def test_gaussian_marginal_theta_roundtrip():
    gm = GaussianMarginal(-1.0, 2.0)
    back = gm.with_theta(gm.theta)
    assert back.loc == -1.0 and back.scale == pytest.approx(2.0)
    with pytest.raises(ValidationError):
        GaussianMarginal(0.0, 0.0)


def test_cell_counts():
    g = uniform_grid(2, 2)
    c = cell_counts(np.array([[0.1, 0.2]] * 4), g)
    assert c[0, 0] == 4 and c.sum() == 4
    assert cell_counts(np.zeros((0, 2)), g).sum() == 0
    u = np.random.default_rng(1).random((10_000, 2))
    cnt = cell_counts(u, uniform_grid(2, 10))
    assert np.all(np.abs(cnt - 100) < 5 * np.sqrt(100 * 0.99))
    assert stats.chisquare(cnt.ravel()).pvalue > 1e-4


def test_copula_log_likelihood(checkerboard, g22):
    counts = np.array([[2, 0], [0, 2]])
    assert copula_log_likelihood(GridCopula.independence(g22), np.array([[3, 1], [0, 5]])) == 0.0
    assert copula_log_likelihood(checkerboard, counts) == pytest.approx(4 * math.log(2))
    assert copula_log_likelihood(checkerboard, np.array([[0, 1], [0, 0]])) == -math.inf


def test_delta_log_likelihood(checkerboard):
    counts = np.array([[3, 0], [0, 2]])
    assert delta_log_likelihood(counts, checkerboard, ExchangeProposal(FULL, 0.0)) == 0.0
    for eps in (0.01, 0.3, 0.49):
        assert delta_log_likelihood(counts, checkerboard, ExchangeProposal(FULL, eps)) < 0
    assert delta_log_likelihood(counts, checkerboard, ExchangeProposal(FULL, 0.5)) == -math.inf


def test_delta_matches_full(rng):
    g = uniform_grid(2, 6)
    C = random_walk(GridCopula.independence(g), 2000, rng)
    counts = rng.integers(0, 5, size=g.shape)
    for _ in range(3000):
        p = random_exchange(C, rng)
        D = apply_exchange(C, p, tol=1e-9)
        full = copula_log_likelihood(D, counts) - copula_log_likelihood(C, counts)
        got = delta_log_likelihood(counts, C, p)
        if math.isinf(full):
            assert got == full
        else:
            assert got == pytest.approx(full, abs=1e-10 * max(1, abs(full)))
            C = D


def test_likelihood_invariant_under_division(rng):
    g = uniform_grid(2, 4)
    C = random_walk(GridCopula.independence(g), 500, rng)
    D = grid_division(C, 0, 0.1)
    # points strictly interior to the original cells, away from the new cut
    u = rng.random((200, 2)) * 0.2 + np.array([0.27, 0.02])
    u = np.vstack([u, rng.random((200, 2)) * 0.2 + 0.52])
    assert copula_log_likelihood(C, cell_counts(u, g)) == pytest.approx(
        copula_log_likelihood(D, cell_counts(u, D.grid)), abs=1e-9)


def test_marginal_log_likelihood():
    y = np.random.default_rng(2).standard_normal((50, 2))
    got = marginal_log_likelihood(Dataset(y), [KnownMarginal.normal()] * 2)
    assert got == pytest.approx(stats.norm.logpdf(y).sum(), rel=1e-12)
    assert marginal_log_likelihood(Dataset(np.zeros((0, 2))), [KnownMarginal.normal()] * 2) == 0.0
