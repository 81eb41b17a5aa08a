import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gridcop.copula import (
    GridCopula,
    bivariate_margin,
    cdf,
    density,
    grid_division,
    project,
    to_grid,
)
from gridcop.errors import DomainError, ValidationError
from gridcop.exchange import random_walk
from gridcop.grid import build_grid, refine_uniformly, uniform_grid
from gridcop.measures import cdf_on_nodes, hellinger
from gridcop.reference import Clayton, Gaussian, GaussMixture, Gumbel, Independence


def _random_copula(g, seed, steps=500):
    return random_walk(GridCopula.independence(g), steps, np.random.default_rng(seed))


def test_invariants_rejected():
    g = uniform_grid(2, 2)
    with pytest.raises(ValidationError):
        GridCopula(g, [[0.5, 0.5], [0.0, 0.0]])  # margins not uniform
    with pytest.raises(ValidationError):
        GridCopula(g, [[0.6, -0.1], [-0.1, 0.6]])
    with pytest.raises(ValidationError):
        GridCopula(g, [[0.3, 0.3], [0.3, 0.3]])


def test_mass_is_read_only(checkerboard):
    with pytest.raises(ValueError):
        checkerboard.mass[0, 0] = 1.0


def test_density(checkerboard):
    g = build_grid([[0.2, 0.7, 1], [0.4, 1]])
    assert density(GridCopula.independence(g), (0.33, 0.91)) == pytest.approx(1.0)
    assert density(checkerboard, (0.25, 0.25)) == 2.0
    assert density(checkerboard, (0.25, 0.75)) == 0.0


def test_density_rejects_outside(checkerboard):
    with pytest.raises(DomainError):
        density(checkerboard, (1.5, 0.2))


def test_cdf(checkerboard):
    assert cdf(checkerboard, (1, 1)) == pytest.approx(1.0)
    assert cdf(checkerboard, (0.5, 0.5)) == pytest.approx(0.5)
    assert cdf(checkerboard, (0.25, 0.25)) == pytest.approx(0.125)


def test_cdf_at_nodes_is_cumulative_mass():
    C = _random_copula(uniform_grid(2, 4), 1)
    F = cdf_on_nodes(C)
    for a, x in enumerate(C.grid.edges(0)):
        for b, y in enumerate(C.grid.edges(1)):
            assert cdf(C, (x, y)) == pytest.approx(C.mass[:a, :b].sum(), abs=1e-14)
            assert F[a, b] == pytest.approx(C.mass[:a, :b].sum(), abs=1e-14)


def test_project_independence():
    g = build_grid([[0.1, 0.5, 1], [0.3, 1], [0.25, 0.5, 1]])
    np.testing.assert_allclose(project(Independence(3), g).mass, g.volumes, atol=1e-15)
    g2 = build_grid([[0.1, 0.5, 1], [0.3, 1]])
    np.testing.assert_allclose(project(Gaussian.bivariate(0.0), g2).mass, g2.volumes, atol=1e-14)


def test_project_clayton_2x2():
    C = project(Clayton(3.0), uniform_grid(2, 2))
    m11 = (2 * 0.5**-3 - 1) ** (-1 / 3)
    assert m11 == pytest.approx(0.405480, abs=1e-6)
    np.testing.assert_allclose(C.mass, [[m11, 0.5 - m11], [0.5 - m11, m11]], atol=1e-14)


@pytest.mark.parametrize("ref", [Clayton(0.5), Clayton(8.0), Gumbel(1.5), Gumbel(5.0),
                                 Gaussian.bivariate(-0.7), Gaussian.bivariate(0.95), GaussMixture()])
def test_projection_is_valid(ref):
    C = project(ref, uniform_grid(2, 15))
    assert C.is_valid(1e-9)


def test_grid_division(checkerboard):
    D = grid_division(checkerboard, 0, 0.25)
    assert D.grid.cuts[0] == (0.25, 0.5, 1.0)
    np.testing.assert_allclose(D.mass[:2, 0], [0.25, 0.25])
    ind = grid_division(GridCopula.independence(uniform_grid(2, 3)), 1, 0.1)
    np.testing.assert_allclose(ind.mass, ind.grid.volumes, atol=1e-15)


def test_grid_division_preserves_cdf():
    C = _random_copula(uniform_grid(2, 5), 3)
    D = grid_division(grid_division(C, 0, 0.33), 1, 0.77)
    u = np.random.default_rng(0).random((1000, 2))
    np.testing.assert_allclose(cdf(C, u), cdf(D, u), atol=1e-12)


def test_to_grid_matches_division():
    C = _random_copula(uniform_grid(2, 3), 4)
    fine = refine_uniformly(C.grid, 2)
    a = to_grid(C, fine)
    b = C
    for i in range(2):
        for x in fine.cuts[i][:-1]:
            if x not in b.grid.cuts[i]:
                b = grid_division(b, i, x)
    assert a.grid == b.grid
    np.testing.assert_allclose(a.mass, b.mass, atol=1e-15)


def test_bivariate_margin():
    C = _random_copula(uniform_grid(2, 3), 5)
    assert bivariate_margin(C, 0, 1) is C
    ind3 = GridCopula.independence(uniform_grid(3, 2))
    np.testing.assert_allclose(bivariate_margin(ind3, 0, 2).mass, np.full((2, 2), 0.25))
    m = np.zeros((2, 2, 2))
    m[0, 0, 0] = m[1, 1, 1] = 0.5
    np.testing.assert_allclose(bivariate_margin(GridCopula(uniform_grid(3, 2), m), 0, 1).mass,
                               [[0.5, 0], [0, 0.5]])


def test_bivariate_margin_commutes_with_division():
    C = _random_copula(uniform_grid(3, 3), 6, steps=2000)
    a = bivariate_margin(grid_division(C, 2, 0.1), 0, 1)
    b = bivariate_margin(C, 0, 1)
    np.testing.assert_allclose(a.mass, b.mass, atol=1e-15)


@given(st.integers(2, 60))
@settings(max_examples=10, deadline=None)
def test_projection_hellinger_bounded(m):
    ref = Gaussian.bivariate(0.5)
    fine = project(ref, uniform_grid(2, 120))
    h = hellinger(project(ref, uniform_grid(2, m)), fine)
    assert 0 <= h < 0.5
