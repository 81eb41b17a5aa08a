import numpy as np
import pytest

from gridcop.copula import GridCopula, project
from gridcop.errors import DomainError, Unsupported, ValidationError
from gridcop.exchange import random_exchange, random_walk
from gridcop.grid import build_grid, uniform_grid
from gridcop.priors import (
    CARPrior,
    HierarchicalPrior,
    ICARPrior,
    SquaredL2Prior,
    alpha_from_star,
    centering_on_grid,
    delta_log_prior,
    distance,
    gamma_bounds,
    hierarchical_R_log_ratio,
    log_prior_kernel,
    precision_matrix,
    weight_matrix,
)
from gridcop.reference import Gaussian

PRIORS = [SquaredL2Prior(3.0), CARPrior(3.0, 0.5), ICARPrior(3.0), ICARPrior(3.0, weights="inverse_distance")]


def _random(g, seed, steps=1000):
    return random_walk(GridCopula.independence(g), steps, np.random.default_rng(seed))


def test_alpha_from_star():
    assert alpha_from_star(400, uniform_grid(2, 50)) == 1_000_000
    assert alpha_from_star(40, uniform_grid(2, 6)) == 1440
    assert alpha_from_star(2, uniform_grid(2, 10)) == 200
    assert alpha_from_star(0, uniform_grid(2, 10)) == 0
    with pytest.raises(DomainError):
        alpha_from_star(-1, uniform_grid(2, 3))


def test_prior_rejects_negative_alpha():
    with pytest.raises(ValidationError):
        SquaredL2Prior(-1.0)


@pytest.mark.parametrize("p", PRIORS, ids=lambda p: type(p).__name__)
def test_kernel_zero_at_center(p):
    g = uniform_grid(2, 4)
    C0 = centering_on_grid(p, g)
    assert log_prior_kernel(p, C0, C0) == 0.0
    assert log_prior_kernel(p, _random(g, 1), C0) < 0


def test_l2_hand_value(checkerboard, g22):
    # alpha = 4 on the 2x2 grid means alpha_star = 1
    p = SquaredL2Prior(1.0)
    assert distance(p, checkerboard, GridCopula.independence(g22)) == pytest.approx(1.0)
    assert log_prior_kernel(p, checkerboard, GridCopula.independence(g22)) == pytest.approx(-2.0)


def test_l2_is_integrated_squared_density_difference():
    from gridcop.measures import integrated_squared_error

    g = build_grid([[0.1, 0.6, 1], [0.45, 1]])
    A, B = _random(g, 2), _random(g, 3)
    assert distance(SquaredL2Prior(1.0), A, B) == pytest.approx(integrated_squared_error(A, B), rel=1e-12)


def test_l2_equal_volume_simplified_form():
    # sum over cells of lambda * (c - c0)^2 with c = mass / lambda
    g = uniform_grid(2, 5)
    A, B = _random(g, 4), _random(g, 5)
    lam = 1 / 25
    direct = np.sum(lam * (A.mass / lam - B.mass / lam) ** 2)
    assert distance(SquaredL2Prior(1.0), A, B) == pytest.approx(direct, rel=1e-12)


def test_icar_constant_shift_invariance():
    g = uniform_grid(2, 5)
    Q = precision_matrix(ICARPrior(1.0), g)
    v = np.random.default_rng(0).standard_normal(g.n_cells)
    assert v @ Q @ v == pytest.approx((v + 3.7) @ Q @ (v + 3.7), rel=1e-12)


def test_icar_positive_on_copula_differences():
    g = uniform_grid(2, 4)
    Q = precision_matrix(ICARPrior(1.0), g)
    for s in range(20):
        v = (_random(g, s).mass - _random(g, 100 + s).mass).ravel()
        assert v @ Q @ v > 0
    ev = np.linalg.eigvalsh(Q.toarray())
    assert abs(ev[0]) < 1e-12 and ev[1] > 1e-6


def test_car_positive_definite():
    g = uniform_grid(2, 5)
    lo, hi = gamma_bounds(weight_matrix(g))
    rng = np.random.default_rng(1)
    for gamma in (lo * 0.99, 0.0, 0.9, hi * 0.999):
        Q = precision_matrix(CARPrior(1.0, gamma), g)
        for _ in range(10):
            v = rng.standard_normal(g.n_cells)
            assert v @ Q @ v > 0


def test_car_rejects_gamma_outside():
    with pytest.raises(ValidationError):
        precision_matrix(CARPrior(1.0, 1.0), uniform_grid(2, 3))


def test_gamma_bounds():
    lo, hi = gamma_bounds(weight_matrix(uniform_grid(2, 2)))
    assert lo == pytest.approx(-1.0) and hi == pytest.approx(1.0)
    assert not lo < 1.0 < hi
    lo, hi = gamma_bounds(weight_matrix(uniform_grid(2, 5)))
    assert lo == pytest.approx(-hi)  # grid graphs are bipartite


def test_weight_matrix():
    W = weight_matrix(uniform_grid(2, 3))
    assert (W != W.T).nnz == 0
    assert W.diagonal().sum() == 0
    assert W.sum() == 2 * 12  # 12 edges in a 3x3 lattice
    with pytest.raises(ValidationError):
        weight_matrix(uniform_grid(2, 60), "inverse_distance")


@pytest.mark.parametrize("p", PRIORS + [SquaredL2Prior(2.0, Gaussian.bivariate(0.4))], ids=lambda p: type(p).__name__)
def test_delta_matches_full_recomputation(p):
    from gridcop.exchange import apply_exchange

    g = build_grid([0.05 * np.arange(1, 21), [0.1, 0.2, 0.35, 0.5, 0.62, 0.7, 0.8, 0.9, 0.95, 1.0]]) \
        if isinstance(p, SquaredL2Prior) else uniform_grid(2, 10)
    C0 = centering_on_grid(p, g)
    C = _random(g, 7, steps=5000)
    rng = np.random.default_rng(8)
    for _ in range(2000):
        prop = random_exchange(C, rng)
        D = apply_exchange(C, prop, tol=1e-9)
        full = log_prior_kernel(p, D, C0) - log_prior_kernel(p, C, C0)
        assert delta_log_prior(p, C, C0, prop) == pytest.approx(full, abs=1e-10 * max(1.0, abs(full)))
        C = D


def test_delta_zero_eps(checkerboard):
    from gridcop.exchange import ExchangeProposal, ExchangeSite

    p = SquaredL2Prior(5.0)
    prop = ExchangeProposal(ExchangeSite(0, 1, (), 0, 1, 0, 1), 0.0)
    assert delta_log_prior(p, checkerboard, GridCopula.independence(checkerboard.grid), prop) == 0.0


def test_flat_limit():
    g = uniform_grid(2, 4)
    for p in (SquaredL2Prior(0.0), ICARPrior(0.0)):
        assert log_prior_kernel(p, _random(g, 1), GridCopula.independence(g)) == 0.0


def test_hierarchical_prior_validation():
    with pytest.raises(ValidationError):
        HierarchicalPrior(ICARPrior(1.0))  # independence centering
    with pytest.raises(Unsupported):
        HierarchicalPrior(ICARPrior(1.0, centering=Gaussian(np.eye(3))))
    h = HierarchicalPrior(ICARPrior(2.0, centering=Gaussian.bivariate(0.1)))
    assert h.alpha_star == 2.0


def test_hierarchical_ratio():
    g = uniform_grid(2, 6)
    inner = ICARPrior(2.0, centering=Gaussian.bivariate(0.0))
    R0 = np.array([[1, 0.2], [0.2, 1]])
    R1 = np.array([[1, 0.6], [0.6, 1]])
    C = _random(g, 9)
    assert hierarchical_R_log_ratio(inner, C, g, R0, R0) == 0.0
    on_center = project(Gaussian(R1), g)
    assert hierarchical_R_log_ratio(inner, on_center, g, R0, R1) >= 0
    two_way = log_prior_kernel(inner, C, project(Gaussian(R1), g)) - log_prior_kernel(inner, C, project(Gaussian(R0), g))
    assert hierarchical_R_log_ratio(inner, C, g, R0, R1) == pytest.approx(two_way, abs=1e-10)
