"""Parametric reference copulas: centering models, data generators, ground truth.

All CDFs accept a point of length ``d`` or an ``(n, d)`` array of points.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import special

from .bvn import bivariate_normal_cdf, norm_cdf
from .errors import DomainError, Unsupported, ValidationError

__all__ = [
    "ReferenceCopula",
    "Independence",
    "Gaussian",
    "Clayton",
    "Gumbel",
    "GaussMixture",
    "tau_to_param",
    "from_tau",
    "make_reference",
]


def _points(u, d):
    u = np.asarray(u, dtype=float)
    single = u.ndim == 1
    pts = np.atleast_2d(u)
    if pts.shape[1] != d:
        raise ValidationError(f"expected {d} coordinates, got {pts.shape[1]}")
    if np.any(np.isnan(pts)) or np.any(pts < 0.0) or np.any(pts > 1.0):
        raise DomainError("coordinates must lie in [0, 1]")
    return pts, single


def _finish(vals, single):
    vals = np.clip(vals, 0.0, 1.0)
    return float(vals[0]) if single else vals


def norm_ppf(u):
    return special.ndtri(u)


class ReferenceCopula:
    """Base class; subclasses implement ``_cdf`` on an ``(n, d)`` array."""

    family: str = ""
    dims: int = 2

    def cdf(self, u):
        pts, single = _points(u, self.dims)
        return _finish(self._cdf(pts), single)

    def sample(self, n: int, rng: np.random.Generator) -> np.ndarray:
        raise NotImplementedError

    def params(self) -> dict:
        raise NotImplementedError


@dataclass(frozen=True)
class Independence(ReferenceCopula):
    dims: int = 2
    family = "independence"

    def _cdf(self, pts):
        return np.prod(pts, axis=1)

    def sample(self, n, rng):
        return rng.random((n, self.dims))

    def params(self):
        return {"dims": self.dims}


@dataclass(frozen=True)
class Gaussian(ReferenceCopula):
    """Gaussian copula with correlation matrix ``R``.

    The CDF is available for ``d = 2`` only; sampling works in any dimension.
    """

    R: np.ndarray = field(default_factory=lambda: np.eye(2))
    family = "gaussian"

    def __post_init__(self):
        R = np.array(self.R, dtype=float)
        if R.ndim == 0:
            R = np.array([[1.0, float(R)], [float(R), 1.0]])
        if R.ndim != 2 or R.shape[0] != R.shape[1] or R.shape[0] < 2:
            raise ValidationError("R must be a square matrix of size at least 2")
        if not np.allclose(R, R.T, atol=1e-12, rtol=0):
            raise ValidationError("R must be symmetric")
        if not np.allclose(np.diag(R), 1.0, atol=1e-12, rtol=0):
            raise ValidationError("R must have unit diagonal")
        if np.linalg.eigvalsh(R).min() <= 0:
            raise ValidationError("R must be positive definite")
        R.flags.writeable = False
        object.__setattr__(self, "R", R)

    @classmethod
    def bivariate(cls, rho: float) -> "Gaussian":
        return cls(np.array([[1.0, rho], [rho, 1.0]]))

    @property
    def dims(self) -> int:
        return self.R.shape[0]

    @property
    def rho(self) -> float:
        if self.dims != 2:
            raise Unsupported("rho is defined for the bivariate Gaussian copula only")
        return float(self.R[0, 1])

    def _cdf(self, pts):
        if self.dims != 2:
            raise Unsupported("Gaussian copula CDF is implemented for d = 2 only")
        x = norm_ppf(pts[:, 0])
        y = norm_ppf(pts[:, 1])
        return np.asarray(bivariate_normal_cdf(x, y, self.rho), dtype=float).reshape(-1)

    def sample(self, n, rng):
        L = np.linalg.cholesky(self.R)
        z = rng.standard_normal((n, self.dims)) @ L.T
        return norm_cdf(z)

    def params(self):
        return {"R": self.R.tolist()}

    def __eq__(self, other):
        return isinstance(other, Gaussian) and np.array_equal(self.R, other.R)

    def __hash__(self):
        return hash(self.R.tobytes())


@dataclass(frozen=True)
class Clayton(ReferenceCopula):
    theta: float = 1.0
    family = "clayton"

    def __post_init__(self):
        if not self.theta > 0:
            raise ValidationError(f"Clayton theta must be positive, got {self.theta}")

    def generator(self, t):
        return (np.power(t, -self.theta) - 1.0) / self.theta

    def generator_inv(self, s):
        return np.power(1.0 + self.theta * s, -1.0 / self.theta)

    def _cdf(self, pts):
        th = self.theta
        with np.errstate(divide="ignore", over="ignore"):
            s = np.power(pts[:, 0], -th) + np.power(pts[:, 1], -th) - 1.0
            return np.power(np.maximum(s, 0.0), -1.0 / th)

    def sample(self, n, rng):
        th = self.theta
        u = rng.random(n)
        w = rng.random(n)
        v = np.power(np.power(u, -th) * (np.power(w, -th / (1.0 + th)) - 1.0) + 1.0, -1.0 / th)
        return np.column_stack([u, v])

    def params(self):
        return {"theta": self.theta}


@dataclass(frozen=True)
class Gumbel(ReferenceCopula):
    theta: float = 1.0
    family = "gumbel"

    def __post_init__(self):
        if not self.theta >= 1:
            raise ValidationError(f"Gumbel theta must be at least 1, got {self.theta}")

    def generator(self, t):
        return np.power(-np.log(t), self.theta)

    def generator_inv(self, s):
        return np.exp(-np.power(s, 1.0 / self.theta))

    def _cdf(self, pts):
        th = self.theta
        with np.errstate(divide="ignore"):
            a = np.power(-np.log(pts[:, 0]), th) + np.power(-np.log(pts[:, 1]), th)
        return np.exp(-np.power(a, 1.0 / th))

    def sample(self, n, rng):
        # Conditional inversion. With s = -log u and z = A^(1/theta) the
        # conditional CDF equation reduces to
        #   z + (theta - 1) log z = s + (theta - 1) log s - log w,
        # whose left side is increasing and concave in z >= s, so Newton from
        # z = s converges monotonically.
        th = self.theta
        u = rng.random(n)
        w = rng.random(n)
        s = -np.log(u)
        rhs = s + (th - 1.0) * np.log(s) - np.log(w)
        z = s.copy()
        for _ in range(100):
            g = z + (th - 1.0) * np.log(z) - rhs
            step = g / (1.0 + (th - 1.0) / z)
            z = np.maximum(z - step, s)
            if np.all(np.abs(step) <= 1e-14 * np.maximum(z, 1.0)):
                break
        t = np.maximum(np.power(z, th) - np.power(s, th), 0.0)
        v = np.exp(-np.power(t, 1.0 / th))
        return np.column_stack([u, v])

    def params(self):
        return {"theta": self.theta}


@dataclass(frozen=True)
class GaussMixture(ReferenceCopula):
    """Copula of an equal-weight mixture of two unit-covariance normals.

    Defaults are the means ``(1, 1)`` and ``(-1, -1)``. Within each
    component the coordinates are independent, so the joint CDF is a mix of
    products of univariate normal CDFs.
    """

    mean1: tuple = (1.0, 1.0)
    mean2: tuple = (-1.0, -1.0)
    family = "gauss_mixture"

    def __post_init__(self):
        m1 = tuple(float(x) for x in self.mean1)
        m2 = tuple(float(x) for x in self.mean2)
        if len(m1) != len(m2) or len(m1) < 2:
            raise ValidationError("mixture means must have the same length >= 2")
        object.__setattr__(self, "mean1", m1)
        object.__setattr__(self, "mean2", m2)

    @property
    def dims(self) -> int:
        return len(self.mean1)

    def marginal_cdf(self, x, dim: int):
        x = np.asarray(x, dtype=float)
        return 0.5 * norm_cdf(x - self.mean1[dim]) + 0.5 * norm_cdf(x - self.mean2[dim])

    def marginal_pdf(self, x, dim: int):
        x = np.asarray(x, dtype=float)
        c = 1.0 / math.sqrt(2.0 * math.pi)
        return 0.5 * c * (np.exp(-0.5 * (x - self.mean1[dim]) ** 2) + np.exp(-0.5 * (x - self.mean2[dim]) ** 2))

    def marginal_ppf(self, u, dim: int, tol: float = 1e-12):
        """Inverse marginal CDF by bisection on a bracket that always holds it."""
        u = np.atleast_1d(np.asarray(u, dtype=float))
        out = np.empty_like(u)
        out[u <= 0.0] = -np.inf
        out[u >= 1.0] = np.inf
        inner = (u > 0.0) & (u < 1.0)
        q = norm_ppf(u[inner])
        lo_shift = min(self.mean1[dim], self.mean2[dim])
        hi_shift = max(self.mean1[dim], self.mean2[dim])
        lo = q + lo_shift
        hi = q + hi_shift
        target = u[inner]
        while np.any(hi - lo > tol):
            mid = 0.5 * (lo + hi)
            below = self.marginal_cdf(mid, dim) < target
            lo = np.where(below, mid, lo)
            hi = np.where(below, hi, mid)
        out[inner] = 0.5 * (lo + hi)
        return out

    def _cdf(self, pts):
        x = np.column_stack([self.marginal_ppf(pts[:, i], i) for i in range(self.dims)])
        a = np.prod(norm_cdf(x - np.asarray(self.mean1)), axis=1)
        b = np.prod(norm_cdf(x - np.asarray(self.mean2)), axis=1)
        return 0.5 * a + 0.5 * b

    def sample_raw(self, n, rng):
        """Draws on the original (normal-mixture) scale."""
        comp = rng.random(n) < 0.5
        means = np.where(comp[:, None], np.asarray(self.mean1), np.asarray(self.mean2))
        return means + rng.standard_normal((n, self.dims))

    def sample(self, n, rng):
        x = self.sample_raw(n, rng)
        return np.column_stack([self.marginal_cdf(x[:, i], i) for i in range(self.dims)])

    def params(self):
        return {"mean1": list(self.mean1), "mean2": list(self.mean2)}


def tau_to_param(family: str, tau: float) -> float:
    """Parameter giving Kendall's tau for the Clayton, Gumbel or Gaussian family."""
    if not 0.0 < tau < 1.0:
        raise DomainError(f"tau must lie in (0, 1), got {tau}")
    if family == "clayton":
        return 2.0 * tau / (1.0 - tau)
    if family == "gumbel":
        return 1.0 / (1.0 - tau)
    if family == "gaussian":
        return math.sin(math.pi * tau / 2.0)
    raise DomainError(f"no tau inversion for family {family!r}")


def from_tau(family: str, tau: float) -> ReferenceCopula:
    p = tau_to_param(family, tau)
    return make_reference(family, rho=p) if family == "gaussian" else make_reference(family, theta=p)


def make_reference(family: str, **params) -> ReferenceCopula:
    """Build a reference copula from a family tag and keyword parameters."""
    family = family.lower()
    try:
        if family == "independence":
            return Independence(int(params.pop("dims", 2)))
        if family == "gaussian":
            if "R" in params:
                out = Gaussian(np.asarray(params.pop("R"), dtype=float))
            else:
                out = Gaussian.bivariate(float(params.pop("rho")))
        elif family == "clayton":
            out = Clayton(float(params.pop("theta")))
        elif family == "gumbel":
            out = Gumbel(float(params.pop("theta")))
        elif family in ("gauss_mixture", "mixture"):
            out = GaussMixture(tuple(params.pop("mean1", (1.0, 1.0))), tuple(params.pop("mean2", (-1.0, -1.0))))
        else:
            raise ValidationError(f"unknown copula family {family!r}")
    except KeyError as exc:
        raise ValidationError(f"family {family!r} requires parameter {exc.args[0]!r}") from None
    if params:
        raise ValidationError(f"unexpected parameters for {family!r}: {sorted(params)}")
    return out
