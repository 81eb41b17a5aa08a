"""Metropolis-within-Gibbs sampler for grid-uniform copula models.

One iteration ("sweep") consists of

1. ``proposals_per_sweep`` random rectangle exchanges (default: one per
   cell), each accepted with the usual Metropolis rule; the proposal is
   symmetric so no Hastings term appears;
2. one hit-and-run update of the centering correlation matrix when the
   prior is hierarchical;
3. one random-walk update per parametric marginal.

The chain is deterministic given ``SamplerConfig.seed``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy import special

from . import _kernels
from .copula import CHAIN_TOL, GridCopula, bivariate_margin, project
from .errors import EmptyChain, NumericalError, ValidationError
from .exchange import grid_layout
from .grid import Grid, refine_uniformly
from .likelihood import Dataset, KnownMarginal, copula_log_likelihood, marginal_log_likelihood
from .measures import hellinger, kendall_tau, spearman_rho
from .priors import (
    HierarchicalPrior,
    PriorSpec,
    alpha_from_star,
    centering_on_grid,
    precision_matrix,
)
from .reference import Gaussian, ReferenceCopula

TARGET_ACCEPTANCE = 0.3


@dataclass
class SamplerConfig:
    iterations: int
    burn_in: int = 0
    thinning: int = 1
    seed: int = 0
    hit_and_run_r: float | None = None  # falls back to the prior's r
    marginal_step_scale: float = 0.1
    record_hellinger_to: ReferenceCopula | None = None
    hellinger_refine: int = 4
    record_measures: bool = True
    store_samples: bool = True
    proposals_per_sweep: int | None = None  # default: number of cells
    hastings_correction: bool = True
    verify: bool = False

    def __post_init__(self):
        if self.iterations < 1:
            raise ValidationError("iterations must be positive")
        if not 0 <= self.burn_in < self.iterations:
            raise ValidationError("burn_in must satisfy 0 <= burn_in < iterations")
        if self.thinning < 1:
            raise ValidationError("thinning must be at least 1")
        if self.hit_and_run_r is not None and not self.hit_and_run_r > 0:
            raise ValidationError("hit_and_run_r must be positive")
        if not self.marginal_step_scale > 0:
            raise ValidationError("marginal_step_scale must be positive")
        if self.proposals_per_sweep is not None and self.proposals_per_sweep < 1:
            raise ValidationError("proposals_per_sweep must be positive")

    @property
    def n_samples(self) -> int:
        return (self.iterations - self.burn_in) // self.thinning


class ChainState:
    """Mutable state of one chain plus the caches that make updates local.

    ``quad`` caches v'Qv with v = mass - centering mass and ``qv`` caches Qv;
    ``loglik`` caches the copula part of the log-likelihood.
    """

    def __init__(self, grid: Grid, prior: PriorSpec, data: Dataset | None = None,
                 marginals: Sequence | None = None, copula: GridCopula | None = None):
        self.grid = grid
        self.prior = prior
        self.alpha = alpha_from_star(prior.alpha_star, grid)
        self.half_alpha = 0.5 * self.alpha
        self.Q = precision_matrix(prior, grid)
        self.shape, self.strides, self.elig = grid_layout(grid)
        start = copula if copula is not None else GridCopula.independence(grid)
        if start.grid != grid:
            raise ValidationError("starting copula is on a different grid")
        self.mass = start.flat.copy()
        self.R = np.array(prior.centering.R) if isinstance(prior, HierarchicalPrior) else None
        self.mass0 = centering_on_grid(prior, grid, self.R).flat.copy()
        self.data = data if data is not None else Dataset(np.zeros((0, grid.dims)))
        if self.data.n and self.data.d != grid.dims:
            raise ValidationError(f"data has {self.data.d} columns, grid has {grid.dims} dimensions")
        if marginals is None:
            marginals = [KnownMarginal.uniform() for _ in range(grid.dims)]
        if len(marginals) != grid.dims:
            raise ValidationError(f"{len(marginals)} marginals for a {grid.dims}-d grid")
        self.marginals = list(marginals)
        self.interval_idx = np.zeros((self.data.n, grid.dims), dtype=np.int64)
        for j in range(grid.dims):
            self.interval_idx[:, j] = self._locate_column(j, self.marginals[j])
        self.counts = self._counts_from(self.interval_idx)
        self.refresh()

    # -- cache management -------------------------------------------------

    def _locate_column(self, j, marginal):
        if self.data.n == 0:
            return np.zeros(0, dtype=np.int64)
        u = np.asarray(marginal.cdf(self.data.observations[:, j]), float)
        if np.any(np.isnan(u)) or np.any(u < 0) or np.any(u > 1):
            raise NumericalError(f"marginal CDF of column {j} left [0, 1]")
        return np.searchsorted(self.grid.cuts[j], u, side="left").astype(np.int64)

    def _counts_from(self, idx):
        if idx.shape[0] == 0:
            return np.zeros(self.grid.n_cells, dtype=np.int64)
        flat = np.ravel_multi_index(tuple(idx.T), self.grid.shape)
        return np.bincount(flat, minlength=self.grid.n_cells).astype(np.int64)

    def refresh(self) -> None:
        """Recompute every cache from the current state."""
        v = self.mass - self.mass0
        self.qv = np.asarray(self.Q @ v, dtype=float)
        self.quad = float(v @ self.qv)
        self.loglik = self._loglik(self.mass, self.counts)
        self.marg_loglik = marginal_log_likelihood(self.data, self.marginals)

    def _loglik(self, mass, counts):
        C = GridCopula(self.grid, mass, tol=None)
        return copula_log_likelihood(C, counts.reshape(self.grid.shape))

    def check_caches(self, tol: float = 1e-8) -> None:
        v = self.mass - self.mass0
        quad = float(v @ (self.Q @ v))
        ll = self._loglik(self.mass, self.counts)
        if abs(quad - self.quad) > tol * max(1.0, abs(quad)) or abs(ll - self.loglik) > tol * max(1.0, abs(ll)):
            raise NumericalError(
                f"cache drift: quad {self.quad!r} vs {quad!r}, loglik {self.loglik!r} vs {ll!r}"
            )

    # -- views -----------------------------------------------------------

    def copula(self) -> GridCopula:
        return GridCopula(self.grid, self.mass, tol=None)

    def centering(self) -> GridCopula:
        return GridCopula(self.grid, self.mass0, tol=None)

    @property
    def log_prior(self) -> float:
        return -self.half_alpha * self.quad


@dataclass
class ChainOutput:
    grid: Grid
    config: SamplerConfig
    samples: np.ndarray | None  # (k, n_cells) mass vectors
    R: np.ndarray | None  # (k, d, d)
    marginal_params: np.ndarray | None  # (k, n_parametric, 2)
    acceptance: dict = field(default_factory=dict)  # move -> (accepted, proposed)
    functionals: dict = field(default_factory=dict)  # name -> (k,) array
    mass_sum: np.ndarray | None = None
    n_recorded: int = 0
    n_proposals: int = 0

    def acceptance_rate(self, move: str) -> float:
        acc, prop = self.acceptance.get(move, (0, 0))
        return acc / prop if prop else float("nan")


def copula_sweep(state: ChainState, n_props: int, rng: np.random.Generator) -> tuple[int, int]:
    """Run ``n_props`` exchange proposals; returns (accepted, proposed)."""
    _kernels.seed(int(rng.integers(2**32)))
    Q = state.Q
    acc, prop, d_ll, d_quad = _kernels.exchange_sweep(
        state.mass, state.counts, state.shape, state.strides, state.elig,
        Q.indptr, Q.indices, Q.data, state.qv, state.half_alpha, int(n_props),
    )
    state.loglik += d_ll
    state.quad += d_quad
    return int(acc), int(prop)


def copula_step(state: ChainState, prior: PriorSpec | None, rng: np.random.Generator) -> bool:
    """A single random-exchange Metropolis update."""
    acc, _ = copula_sweep(state, 1, rng)
    return bool(acc)


def _truncnorm(scale: float, bound: float, rng: np.random.Generator) -> float:
    """N(0, scale^2) truncated to (-bound, bound), by inversion."""
    p = special.ndtr(bound / scale)
    u = (1.0 - p) + (2.0 * p - 1.0) * rng.random()
    x = scale * float(special.ndtri(u))
    return min(max(x, -bound), bound) if bound > 0 else 0.0


def _log_trunc_mass(scale: float, xi: float) -> float:
    b = xi / (math.sqrt(2.0) * scale)
    return math.log(max(math.erf(b / math.sqrt(2.0)), 1e-300))


def propose_correlation(R: np.ndarray, r: float, rng: np.random.Generator):
    """Hit-and-run perturbation of a correlation matrix.

    Returns ``(R + H, delta, xi)``. ``H`` is symmetric with zero diagonal,
    its off-diagonal entries are ``delta * z / |z|`` for standard normal
    ``z``, and ``delta`` is N(0, r^2) truncated to ``|delta| < xi / sqrt(2)``
    with ``xi`` the least eigenvalue of ``R``. Then ``|H|_2 <= |H|_F =
    sqrt(2) |delta| < xi``, so ``R + H`` stays positive definite.
    """
    R = np.asarray(R, dtype=float)
    d = R.shape[0]
    xi = float(np.linalg.eigvalsh(R)[0])
    iu = np.triu_indices(d, 1)
    z = rng.standard_normal(iu[0].size)
    delta = _truncnorm(r, xi / math.sqrt(2.0), rng)
    H = np.zeros_like(R)
    H[iu] = delta * z / np.linalg.norm(z)
    H = H + H.T
    return R + H, delta, xi


def correlation_step(state: ChainState, prior: PriorSpec, rng: np.random.Generator,
                     r: float | None = None, hastings: bool = True) -> bool:
    if not isinstance(prior, HierarchicalPrior):
        return False
    r = prior.r if r is None else r
    R_new, delta, xi = propose_correlation(state.R, r, rng)
    xi_new = float(np.linalg.eigvalsh(R_new)[0])
    if xi_new <= 0:
        return False  # exact arithmetic keeps R + H definite; only rounding at the boundary gets here
    log_q = 0.0
    if hastings:
        if abs(delta) >= xi_new / math.sqrt(2.0):
            return False  # reverse move impossible
        log_q = _log_trunc_mass(r, xi) - _log_trunc_mass(r, xi_new)
    mass0_new = project(Gaussian(R_new), state.grid).flat
    v_new = state.mass - mass0_new
    qv_new = np.asarray(state.Q @ v_new, dtype=float)
    quad_new = float(v_new @ qv_new)
    log_r = state.half_alpha * (state.quad - quad_new) + log_q
    if log_r >= 0 or math.log(rng.random()) < log_r:
        state.R = R_new
        state.mass0 = mass0_new.copy()
        state.qv = qv_new
        state.quad = quad_new
        return True
    return False


@dataclass
class _MarginalTuning:
    log_steps: np.ndarray
    accepted: np.ndarray
    proposed: np.ndarray


def marginal_step(state: ChainState, data: Dataset | None, rng: np.random.Generator,
                  steps: np.ndarray | None = None) -> list[bool]:
    """Random-walk Metropolis on each parametric marginal's ``theta`` in turn."""
    flags = []
    par = [j for j, m in enumerate(state.marginals) if getattr(m, "parametric", False)]
    for k, j in enumerate(par):
        m_old = state.marginals[j]
        step = 0.1 if steps is None else float(steps[k])
        theta = m_old.theta + step * rng.standard_normal(m_old.theta.size)
        m_new = m_old.with_theta(theta)
        col = state.data.observations[:, j]
        try:
            idx_j = state._locate_column(j, m_new)
        except NumericalError:
            flags.append(False)
            continue
        idx = state.interval_idx.copy()
        idx[:, j] = idx_j
        counts = state._counts_from(idx)
        ll_new = state._loglik(state.mass, counts)
        ml_old = float(np.sum(m_old.logpdf(col)))
        ml_new = float(np.sum(m_new.logpdf(col)))
        log_r = (ll_new - state.loglik) + (ml_new - ml_old) + (m_new.log_prior() - m_old.log_prior())
        if np.isfinite(log_r) and (log_r >= 0 or math.log(rng.random()) < log_r):
            state.marginals[j] = m_new
            state.interval_idx = idx
            state.counts = counts
            state.loglik = ll_new
            state.marg_loglik += ml_new - ml_old
            flags.append(True)
        else:
            flags.append(False)
    return flags


def run_chain(data: Dataset | None, g: Grid, prior: PriorSpec, marginals: Sequence | None,
              cfg: SamplerConfig, start: GridCopula | None = None) -> ChainOutput:
    rng = np.random.default_rng(cfg.seed)
    state = ChainState(g, prior, data, marginals, start)
    n_props = cfg.proposals_per_sweep or g.n_cells
    hier = isinstance(prior, HierarchicalPrior)
    r = cfg.hit_and_run_r if cfg.hit_and_run_r is not None else (prior.r if hier else None)
    par = [j for j, m in enumerate(state.marginals) if getattr(m, "parametric", False)]
    tuning = _MarginalTuning(
        np.full(len(par), math.log(cfg.marginal_step_scale)), np.zeros(len(par)), np.zeros(len(par))
    )

    k = cfg.n_samples
    samples = np.empty((k, g.n_cells)) if cfg.store_samples else None
    R_out = np.empty((k,) + state.R.shape) if hier else None
    marg_out = np.empty((k, len(par), 2)) if par else None
    funcs: dict[str, np.ndarray] = {}
    if cfg.record_measures:
        funcs["kendall_tau"] = np.empty(k)
        funcs["spearman_rho"] = np.empty(k)
    truth = None
    if cfg.record_hellinger_to is not None:
        truth = project(cfg.record_hellinger_to, refine_uniformly(g, cfg.hellinger_refine))
        funcs["hellinger"] = np.empty(k)
    acc = {"copula": [0, 0], "correlation": [0, 0], "marginal": [0, 0]}
    mass_sum = np.zeros(g.n_cells)
    rec = 0

    for t in range(1, cfg.iterations + 1):
        a, p = copula_sweep(state, n_props, rng)
        acc["copula"][0] += a
        acc["copula"][1] += p
        if hier:
            acc["correlation"][0] += correlation_step(state, prior, rng, r, cfg.hastings_correction)
            acc["correlation"][1] += 1
        if par:
            flags = marginal_step(state, data, rng, np.exp(tuning.log_steps))
            f = np.asarray(flags, dtype=float)
            acc["marginal"][0] += int(f.sum())
            acc["marginal"][1] += len(flags)
            if t <= cfg.burn_in:
                # Robbins-Monro adaptation, frozen after burn-in
                tuning.log_steps += (f - TARGET_ACCEPTANCE) / math.sqrt(t)
        if cfg.verify:
            state.check_caches()
            if hier and np.linalg.eigvalsh(state.R)[0] <= 0:
                raise NumericalError("centering correlation left the positive definite cone")
        if t > cfg.burn_in and (t - cfg.burn_in) % cfg.thinning == 0:
            mass_sum += state.mass
            if samples is not None:
                samples[rec] = state.mass
            if R_out is not None:
                R_out[rec] = state.R
            if marg_out is not None:
                marg_out[rec] = [state.marginals[j].theta for j in par]
            if funcs:
                C = state.copula()
                C2 = C if g.dims == 2 else bivariate_margin(C, 0, 1)
                if cfg.record_measures:
                    funcs["kendall_tau"][rec] = kendall_tau(C2)
                    funcs["spearman_rho"][rec] = spearman_rho(C2)
                if truth is not None:
                    funcs["hellinger"][rec] = hellinger(C, truth)
            rec += 1

    return ChainOutput(
        grid=g,
        config=cfg,
        samples=samples,
        R=R_out,
        marginal_params=marg_out,
        acceptance={key: (int(v[0]), int(v[1])) for key, v in acc.items()},
        functionals=funcs,
        mass_sum=mass_sum,
        n_recorded=rec,
        n_proposals=cfg.iterations * n_props,
    )


def posterior_mean(out: ChainOutput) -> GridCopula:
    if out.n_recorded == 0:
        raise EmptyChain("the chain recorded no samples")
    if out.samples is not None:
        mean = out.samples.mean(axis=0)
    else:
        mean = out.mass_sum / out.n_recorded
    return GridCopula(out.grid, mean, tol=CHAIN_TOL)


def prior_simulation_R(g: Grid, alpha_star: float, cfg: SamplerConfig, rng=None,
                       inner: str = "icar", r: float = 0.5) -> np.ndarray:
    """Draws of the centering correlation under the hierarchical prior, no data.

    ``rng`` (an int or Generator) overrides ``cfg.seed`` when given.
    """
    from .priors import ICARPrior, SquaredL2Prior

    if g.dims != 2:
        raise ValidationError("prior simulation of R is defined for bivariate grids")
    centering = Gaussian.bivariate(0.0)
    base = ICARPrior(alpha_star, centering=centering) if inner == "icar" else SquaredL2Prior(alpha_star, centering)
    prior = HierarchicalPrior(base, r)
    if rng is not None:
        seed = int(rng.integers(2**63)) if isinstance(rng, np.random.Generator) else int(rng)
        cfg = SamplerConfig(**{**cfg.__dict__, "seed": seed})
    cfg = SamplerConfig(**{**cfg.__dict__, "record_measures": False, "store_samples": False})
    out = run_chain(None, g, prior, None, cfg)
    return out.R[:, 0, 1].copy()
