import itertools

import numpy as np
import pytest

from gridcop.copula import GridCopula, grid_division, project
from gridcop.errors import DimensionMismatch
from gridcop.exchange import random_walk
from gridcop.grid import build_grid, uniform_grid
from gridcop.measures import hellinger, hellinger_to_reference, integrated_squared_error, kendall_tau, spearman_rho
from gridcop.reference import Clayton, Gaussian


def _random(g, seed, steps=2000):
    return random_walk(GridCopula.independence(g), steps, np.random.default_rng(seed))


def _sample(C, n, rng):
    """Draws from a grid copula: pick a cell, then a uniform point in it."""
    g = C.grid
    k = rng.choice(g.n_cells, size=n, p=C.flat / C.flat.sum())
    idx = np.array(np.unravel_index(k, g.shape)).T
    out = np.empty((n, 2))
    for i in range(2):
        e = g.edges(i)
        out[:, i] = e[idx[:, i]] + rng.random(n) * np.diff(e)[idx[:, i]]
    return out


def _spearman_oracle(C):
    # 12 * E[UV] - 3 with E[UV] from cell midpoints (exact for a product-uniform cell)
    cu = C.grid.centers(0)[:, None]
    cv = C.grid.centers(1)[None, :]
    return 12.0 * float(np.sum(C.mass * cu * cv)) - 3.0


def _kendall_brute(C, n=200):
    """4 E[C(U,V)] - 1 by midpoint quadrature on a fine sub-mesh (oracle)."""
    from gridcop.copula import cdf

    total = 0.0
    for (a, b) in itertools.product(range(C.grid.shape[0]), range(C.grid.shape[1])):
        if C.mass[a, b] == 0:
            continue
        ea, eb = C.grid.edges(0), C.grid.edges(1)
        t = (np.arange(n) + 0.5) / n
        uu = ea[a] + t * (ea[a + 1] - ea[a])
        vv = eb[b] + t * (eb[b + 1] - eb[b])
        pts = np.array(np.meshgrid(uu, vv, indexing="ij")).reshape(2, -1).T
        total += C.mass[a, b] * float(np.mean(cdf(C, pts)))
    return 4.0 * total - 1.0


def test_independence_zero():
    C = GridCopula.independence(build_grid([[0.2, 0.5, 1], [0.7, 1]]))
    assert abs(spearman_rho(C)) < 1e-14
    assert abs(kendall_tau(C)) < 1e-14


def test_checkerboard(checkerboard, g22):
    assert abs(kendall_tau(checkerboard) - 0.5) < 1e-12
    assert abs(spearman_rho(checkerboard) - 0.75) < 1e-12
    ind = GridCopula.independence(g22)
    assert hellinger(ind, checkerboard) == pytest.approx(np.sqrt(1 - np.sqrt(2) / 2), abs=1e-12)
    assert integrated_squared_error(ind, checkerboard) == pytest.approx(1.0, abs=1e-12)


def test_gaussian_projection():
    C = project(Gaussian.bivariate(0.5), uniform_grid(2, 100))
    assert abs(kendall_tau(C) - 1 / 3) < 0.01
    assert abs(spearman_rho(C) - 6 / np.pi * np.arcsin(0.25)) < 0.01


def test_spearman_matches_oracle():
    g = build_grid([[0.1, 0.35, 0.8, 1], [0.5, 0.55, 1]])
    for s in range(5):
        C = _random(g, s)
        assert spearman_rho(C) == pytest.approx(_spearman_oracle(C), abs=1e-12)


def test_kendall_matches_quadrature_oracle():
    g = build_grid([[0.2, 0.6, 1], [0.3, 1]])
    for s in range(3):
        C = _random(g, s)
        assert kendall_tau(C) == pytest.approx(_kendall_brute(C), abs=1e-4)


def test_kendall_matches_concordance_mc():
    rng = np.random.default_rng(7)
    g = uniform_grid(2, 4)
    for s in range(20):
        C = _random(g, 100 + s, steps=50)
        x = _sample(C, 4000, rng)
        y = _sample(C, 4000, rng)
        conc = np.sign(x[:, 0] - y[:, 0]) * np.sign(x[:, 1] - y[:, 1])
        se = conc.std() / np.sqrt(conc.size)
        assert abs(conc.mean() - kendall_tau(C)) < 4 * se + 1e-3


def test_ranges():
    g = uniform_grid(2, 5)
    for s in range(200):
        C = _random(g, s, steps=100)
        assert -1 <= kendall_tau(C) <= 1
        assert -1 <= spearman_rho(C) <= 1


def test_same_sign_on_concentrated():
    C = project(Clayton(5.0), uniform_grid(2, 10))
    assert kendall_tau(C) > 0 and spearman_rho(C) > 0
    anti = GridCopula(uniform_grid(2, 2), [[0, 0.5], [0.5, 0]])
    assert kendall_tau(anti) < 0 and spearman_rho(anti) < 0


def test_hellinger_and_ise_basic():
    A = _random(uniform_grid(2, 4), 1)
    B = _random(uniform_grid(2, 3), 2)
    assert hellinger(A, A) < 1e-7
    assert integrated_squared_error(A, A) == 0.0
    assert abs(hellinger(A, B) - hellinger(B, A)) < 1e-14
    assert 0 <= hellinger(A, B) <= 1


def test_distances_invariant_under_division():
    A = _random(uniform_grid(2, 4), 3)
    B = _random(uniform_grid(2, 4), 4)
    A2 = grid_division(A, 0, 0.1)
    B2 = grid_division(grid_division(B, 0, 0.1), 1, 0.9)
    assert hellinger(A2, B2) == pytest.approx(hellinger(A, B), abs=1e-12)
    assert integrated_squared_error(A2, B2) == pytest.approx(integrated_squared_error(A, B), abs=1e-12)
    assert integrated_squared_error(A2, B2, scale="cdf") == pytest.approx(
        integrated_squared_error(A, B, scale="cdf"), abs=1e-14)


def test_cdf_scale_ise_matches_quadrature():
    from gridcop.copula import cdf

    A = _random(uniform_grid(2, 3), 5)
    B = _random(build_grid([[0.4, 1], [0.25, 1]]), 6)
    n = 400
    t = (np.arange(n) + 0.5) / n
    pts = np.array(np.meshgrid(t, t, indexing="ij")).reshape(2, -1).T
    quad = float(np.mean((cdf(A, pts) - cdf(B, pts)) ** 2))
    assert integrated_squared_error(A, B, scale="cdf") == pytest.approx(quad, rel=1e-3)


def test_hellinger_to_reference_decreases():
    ref = Gaussian.bivariate(0.5)
    hs = [hellinger_to_reference(project(ref, uniform_grid(2, m)), ref) for m in (4, 8, 16)]
    assert hs[0] > hs[1] > hs[2]


def test_requires_bivariate():
    C = GridCopula.independence(uniform_grid(3, 2))
    with pytest.raises(DimensionMismatch):
        kendall_tau(C)
    with pytest.raises(ValueError):
        integrated_squared_error(GridCopula.independence(uniform_grid(2, 2)),
                                 GridCopula.independence(uniform_grid(2, 2)), scale="bogus")
