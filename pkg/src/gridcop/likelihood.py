"""Data, marginal models and the grid-copula likelihood.

The log-likelihood of a grid copula splits into the marginal part
``sum log f_j(y_ij)`` and the copula part
``sum_cells count * log(mass / volume)``; exchanges only touch the latter.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .bvn import norm_cdf
from .copula import GridCopula
from .errors import DimensionMismatch, DomainError, GridMismatch, ValidationError
from .exchange import ExchangeProposal, _PATTERN
from .grid import Grid, locate

_LOG_SQRT_2PI = 0.5 * math.log(2.0 * math.pi)


@dataclass(frozen=True)
class Dataset:
    observations: np.ndarray

    def __post_init__(self):
        obs = np.array(self.observations, dtype=float)
        if obs.ndim == 1 and obs.size == 0:
            obs = obs.reshape(0, 2)
        if obs.ndim != 2:
            raise ValidationError("observations must be an (n, d) matrix")
        if np.any(~np.isfinite(obs)):
            rows = np.unique(np.nonzero(~np.isfinite(obs))[0])
            raise ValidationError(f"missing or non-finite values in rows {rows[:5].tolist()}")
        obs.flags.writeable = False
        object.__setattr__(self, "observations", obs)

    @property
    def n(self) -> int:
        return self.observations.shape[0]

    @property
    def d(self) -> int:
        return self.observations.shape[1]


@dataclass(frozen=True)
class KnownMarginal:
    """A fully specified marginal distribution."""

    name: str
    cdf: Callable[[np.ndarray], np.ndarray]
    logpdf: Callable[[np.ndarray], np.ndarray]

    parametric = False

    @classmethod
    def normal(cls, loc: float = 0.0, scale: float = 1.0) -> "KnownMarginal":
        return cls(
            f"normal({loc}, {scale})",
            lambda y: norm_cdf((np.asarray(y, float) - loc) / scale),
            lambda y: -0.5 * ((np.asarray(y, float) - loc) / scale) ** 2 - _LOG_SQRT_2PI - math.log(scale),
        )

    @classmethod
    def uniform(cls) -> "KnownMarginal":
        def logpdf(y):
            y = np.asarray(y, float)
            return np.where((y >= 0) & (y <= 1), 0.0, -np.inf)

        return cls("uniform", lambda y: np.clip(np.asarray(y, float), 0.0, 1.0), logpdf)

    @classmethod
    def normal_mixture(cls, mean1: float = 1.0, mean2: float = -1.0) -> "KnownMarginal":
        """Equal-weight mixture of N(mean1, 1) and N(mean2, 1)."""

        def cdf(y):
            y = np.asarray(y, float)
            return 0.5 * norm_cdf(y - mean1) + 0.5 * norm_cdf(y - mean2)

        def logpdf(y):
            y = np.asarray(y, float)
            a = -0.5 * (y - mean1) ** 2
            b = -0.5 * (y - mean2) ** 2
            return np.logaddexp(a, b) - math.log(2.0) - _LOG_SQRT_2PI

        return cls(f"normal_mixture({mean1}, {mean2})", cdf, logpdf)

    @classmethod
    def quantile_table(cls, x: Sequence[float], u: Sequence[float]) -> "KnownMarginal":
        """Piecewise-linear CDF through the points ``(x[k], u[k])``.

        ``u`` must start at 0, end at 1 and be strictly increasing, as must ``x``.
        """
        x = np.asarray(x, float)
        u = np.asarray(u, float)
        if x.shape != u.shape or x.size < 2:
            raise ValidationError("quantile table needs matching x and u arrays of length >= 2")
        if np.any(np.diff(x) <= 0) or np.any(np.diff(u) <= 0):
            raise ValidationError("quantile table must be strictly increasing")
        if u[0] != 0.0 or u[-1] != 1.0:
            raise ValidationError("quantile table probabilities must run from 0 to 1")
        dens = np.diff(u) / np.diff(x)

        def logpdf(y):
            y = np.asarray(y, float)
            k = np.clip(np.searchsorted(x, y, side="right") - 1, 0, dens.size - 1)
            inside = (y >= x[0]) & (y <= x[-1])
            return np.where(inside, np.log(dens[k]), -np.inf)

        return cls("quantile_table", lambda y: np.interp(y, x, u), logpdf)


@dataclass
class GaussianMarginal:
    """Normal marginal with unknown location and scale.

    The sampler works on ``theta = (loc, log scale)``; the prior is an
    independent normal on each component of ``theta``.
    """

    loc: float = 0.0
    scale: float = 1.0
    prior_loc: tuple[float, float] = (0.0, 10.0)
    prior_log_scale: tuple[float, float] = (0.0, 10.0)

    parametric = True

    def __post_init__(self):
        if not self.scale > 0:
            raise ValidationError(f"scale must be positive, got {self.scale}")

    @property
    def name(self) -> str:
        return "gaussian"

    @property
    def theta(self) -> np.ndarray:
        return np.array([self.loc, math.log(self.scale)])

    def with_theta(self, theta) -> "GaussianMarginal":
        return GaussianMarginal(float(theta[0]), float(math.exp(theta[1])), self.prior_loc, self.prior_log_scale)

    def cdf(self, y):
        return norm_cdf((np.asarray(y, float) - self.loc) / self.scale)

    def logpdf(self, y):
        z = (np.asarray(y, float) - self.loc) / self.scale
        return -0.5 * z * z - _LOG_SQRT_2PI - math.log(self.scale)

    def log_prior(self) -> float:
        m0, s0 = self.prior_loc
        m1, s1 = self.prior_log_scale
        t = self.theta
        return -0.5 * ((t[0] - m0) / s0) ** 2 - 0.5 * ((t[1] - m1) / s1) ** 2


def pseudo_observations(data: Dataset, marginals: Sequence) -> np.ndarray:
    """u_ij = F_j(y_ij)."""
    if len(marginals) != data.d:
        raise DimensionMismatch(f"{len(marginals)} marginals for {data.d}-dimensional data")
    if data.n == 0:
        return np.zeros((0, data.d))
    u = np.column_stack([np.asarray(m.cdf(data.observations[:, j]), float) for j, m in enumerate(marginals)])
    bad = np.isnan(u) | (u < 0.0) | (u > 1.0)
    if np.any(bad):
        i, j = np.argwhere(bad)[0]
        raise DomainError(f"marginal CDF of column {j} gives {u[i, j]!r} at row {i}")
    return u


def cell_counts(u: np.ndarray, g: Grid) -> np.ndarray:
    """Number of pseudo-observations per cell, shape ``g.shape``."""
    u = np.asarray(u, float)
    if u.size == 0:
        return np.zeros(g.shape, dtype=np.int64)
    idx = locate(g, np.atleast_2d(u))
    flat = np.ravel_multi_index(tuple(idx.T), g.shape)
    return np.bincount(flat, minlength=g.n_cells).reshape(g.shape).astype(np.int64)


def marginal_log_likelihood(data: Dataset, marginals: Sequence) -> float:
    if data.n == 0:
        return 0.0
    return float(sum(np.sum(m.logpdf(data.observations[:, j])) for j, m in enumerate(marginals)))


def copula_log_likelihood(C: GridCopula, counts: np.ndarray) -> float:
    counts = np.asarray(counts)
    if counts.shape != C.grid.shape:
        raise GridMismatch(f"counts of shape {counts.shape} for a grid of shape {C.grid.shape}")
    occ = counts > 0
    if np.any(C.mass[occ] <= 0):
        return -math.inf
    return float(np.sum(counts[occ] * np.log(C.mass[occ] / C.grid.volumes[occ])))


def delta_log_likelihood(counts: np.ndarray, C: GridCopula, prop: ExchangeProposal) -> float:
    """Change of the copula log-likelihood under ``prop`` (volumes cancel)."""
    counts = np.asarray(counts)
    if counts.shape != C.grid.shape:
        raise GridMismatch(f"counts of shape {counts.shape} for a grid of shape {C.grid.shape}")
    if prop.epsilon == 0.0:
        return 0.0
    out = 0.0
    for c, s in zip(prop.site.cells(C.grid), _PATTERN):
        n = counts[c]
        if n > 0:
            new = C.mass[c] + s * prop.epsilon
            if new <= 0.0:
                return -math.inf
            out += n * (math.log(new) - math.log(C.mass[c]))
    return out
