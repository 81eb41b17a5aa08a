"""Bayesian estimation of grid-uniform copulas."""

__version__ = "0.1.0"

from .copula import GridCopula, bivariate_margin, cdf, density, grid_division, project, to_grid
from .exchange import ExchangeProposal, ExchangeSite, apply_exchange, exchange_sequence_to, random_exchange
from .grid import Grid, build_grid, locate, neighbors, refine, uniform_grid
from .likelihood import Dataset, GaussianMarginal, KnownMarginal, cell_counts, pseudo_observations
from .mcmc import ChainOutput, SamplerConfig, posterior_mean, prior_simulation_R, run_chain
from .measures import hellinger, integrated_squared_error, kendall_tau, spearman_rho
from .priors import CARPrior, HierarchicalPrior, ICARPrior, SquaredL2Prior
from .reference import Clayton, GaussMixture, Gaussian, Gumbel, Independence, from_tau, make_reference

__all__ = [
    "Grid", "build_grid", "uniform_grid", "locate", "neighbors", "refine",
    "GridCopula", "project", "cdf", "density", "grid_division", "to_grid", "bivariate_margin",
    "ExchangeSite", "ExchangeProposal", "apply_exchange", "random_exchange", "exchange_sequence_to",
    "Independence", "Gaussian", "Clayton", "Gumbel", "GaussMixture", "from_tau", "make_reference",
    "SquaredL2Prior", "CARPrior", "ICARPrior", "HierarchicalPrior",
    "Dataset", "KnownMarginal", "GaussianMarginal", "pseudo_observations", "cell_counts",
    "SamplerConfig", "ChainOutput", "run_chain", "posterior_mean", "prior_simulation_R",
    "spearman_rho", "kendall_tau", "hellinger", "integrated_squared_error",
]
