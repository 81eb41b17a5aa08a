"""Prior kernels over grid-uniform copulas.

Every prior here has the form ``exp(-alpha/2 * v' Q v)`` restricted to the
space of grid copulas, where ``v`` is the vector of cell-mass differences
between the copula and the projected centering copula (enumeration order):

* squared L2: ``Q = diag(1 / volume)``, i.e. the exact integral of the
  squared density difference;
* CAR: ``Q = D_W - gamma W``;
* ICAR: ``Q = D_W - W``.

``alpha = alpha_star * n_cells``. ``alpha_star = 0`` is the flat prior.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from typing import Union

import numpy as np
from scipy import sparse
from scipy.sparse import linalg as splinalg

from .copula import GridCopula, project
from .errors import DomainError, GridMismatch, SingularWeights, Unsupported, ValidationError
from .exchange import ExchangeProposal, _PATTERN
from .grid import Grid
from .reference import Gaussian, Independence, ReferenceCopula

DENSE_WEIGHT_LIMIT = 2500


@dataclass(frozen=True)
class SquaredL2Prior:
    alpha_star: float
    centering: ReferenceCopula = field(default_factory=Independence)

    def __post_init__(self):
        _check_alpha(self.alpha_star)


@dataclass(frozen=True)
class CARPrior:
    alpha_star: float
    gamma: float
    weights: str = "adjacency"
    centering: ReferenceCopula = field(default_factory=Independence)

    def __post_init__(self):
        _check_alpha(self.alpha_star)
        _check_weights(self.weights)


@dataclass(frozen=True)
class ICARPrior:
    alpha_star: float
    weights: str = "adjacency"
    centering: ReferenceCopula = field(default_factory=Independence)

    def __post_init__(self):
        _check_alpha(self.alpha_star)
        _check_weights(self.weights)


BasePrior = Union[SquaredL2Prior, CARPrior, ICARPrior]


@dataclass(frozen=True)
class HierarchicalPrior:
    """Gaussian centering copula whose correlation matrix is random.

    ``inner.centering`` must be Gaussian and gives the starting value of R;
    ``r`` is the scale of the hit-and-run step on R.
    """

    inner: BasePrior
    r: float = 0.5

    def __post_init__(self):
        if not isinstance(self.inner.centering, Gaussian):
            raise ValidationError("hierarchical prior needs a Gaussian centering copula")
        if self.inner.centering.dims != 2:
            raise Unsupported("random centering is supported for d = 2 only; use a fixed centering")
        if not self.r > 0:
            raise ValidationError(f"hit-and-run scale must be positive, got {self.r}")

    @property
    def alpha_star(self) -> float:
        return self.inner.alpha_star

    @property
    def centering(self) -> Gaussian:
        return self.inner.centering


PriorSpec = Union[SquaredL2Prior, CARPrior, ICARPrior, HierarchicalPrior]


def _check_alpha(alpha_star):
    if not np.isfinite(alpha_star) or alpha_star < 0:
        raise ValidationError(f"alpha_star must be nonnegative, got {alpha_star}")


def _check_weights(kind):
    if kind not in ("adjacency", "inverse_distance"):
        raise ValidationError(f"unknown weight kind {kind!r}")


def base_prior(p: PriorSpec) -> BasePrior:
    return p.inner if isinstance(p, HierarchicalPrior) else p


def alpha_from_star(alpha_star: float, g: Grid) -> float:
    if not np.isfinite(alpha_star) or alpha_star < 0:
        raise DomainError(f"alpha_star must be nonnegative, got {alpha_star}")
    return float(alpha_star) * g.n_cells


@lru_cache(maxsize=32)
def weight_matrix(g: Grid, kind: str = "adjacency", allow_dense: bool = False) -> sparse.csr_matrix:
    """Symmetric nonnegative cell-weight matrix with zero diagonal."""
    n = g.n_cells
    if kind == "adjacency":
        idx = np.arange(n).reshape(g.shape)
        rows, cols = [], []
        for i in range(g.dims):
            a = np.take(idx, range(g.shape[i] - 1), axis=i).ravel()
            b = np.take(idx, range(1, g.shape[i]), axis=i).ravel()
            rows += [a, b]
            cols += [b, a]
        rows = np.concatenate(rows) if rows else np.zeros(0, int)
        cols = np.concatenate(cols) if cols else np.zeros(0, int)
        W = sparse.csr_matrix((np.ones(rows.size), (rows, cols)), shape=(n, n))
    elif kind == "inverse_distance":
        if n > DENSE_WEIGHT_LIMIT and not allow_dense:
            raise ValidationError(
                f"inverse-distance weights on {n} cells need O(n^2) memory; pass allow_dense=True"
            )
        mesh = np.meshgrid(*[g.centers(i) for i in range(g.dims)], indexing="ij")
        pts = np.stack([m.ravel() for m in mesh], axis=1)
        dist = np.sqrt(((pts[:, None, :] - pts[None, :, :]) ** 2).sum(-1))
        with np.errstate(divide="ignore"):
            Wd = np.where(dist > 0, 1.0 / dist, 0.0)
        W = sparse.csr_matrix(Wd)
    else:
        raise ValidationError(f"unknown weight kind {kind!r}")
    W.sort_indices()
    return W


def gamma_bounds(W) -> tuple[float, float]:
    """Open interval (1/lambda_min, 1/lambda_max) of admissible CAR gammas."""
    W = sparse.csr_matrix(W)
    deg = np.asarray(W.sum(axis=1)).ravel()
    if np.any(deg <= 0):
        raise SingularWeights("weight matrix has a zero row sum")
    s = sparse.diags(1.0 / np.sqrt(deg))
    N = s @ W @ s
    if N.shape[0] <= 2000:
        ev = np.linalg.eigvalsh(N.toarray())
        lo, hi = ev[0], ev[-1]
    else:
        lo = splinalg.eigsh(N, k=1, which="SA", return_eigenvectors=False)[0]
        hi = splinalg.eigsh(N, k=1, which="LA", return_eigenvectors=False)[0]
    # the extreme eigenvalues are exactly +-1 for connected (bipartite) graphs
    lo = -1.0 if abs(lo + 1.0) < 1e-10 else lo
    hi = 1.0 if abs(hi - 1.0) < 1e-10 else hi
    return 1.0 / lo, 1.0 / hi


@lru_cache(maxsize=32)
def _precision(kind: str, gamma: float, weights: str, g: Grid) -> sparse.csr_matrix:
    if kind == "l2":
        Q = sparse.diags(1.0 / g.volumes.ravel()).tocsr()
    else:
        W = weight_matrix(g, weights, allow_dense=True)
        if kind == "car":
            lo, hi = gamma_bounds(W)
            if not lo < gamma < hi:
                raise ValidationError(f"CAR gamma {gamma} outside the admissible interval ({lo:.6g}, {hi:.6g})")
        deg = np.asarray(W.sum(axis=1)).ravel()
        Q = (sparse.diags(deg) - gamma * W).tocsr()
    Q.sort_indices()
    Q.data.flags.writeable = False
    return Q


def precision_matrix(p: PriorSpec, g: Grid) -> sparse.csr_matrix:
    p = base_prior(p)
    if isinstance(p, SquaredL2Prior):
        return _precision("l2", 0.0, "", g)
    if isinstance(p, CARPrior):
        return _precision("car", float(p.gamma), p.weights, g)
    return _precision("icar", 1.0, p.weights, g)


def centering_on_grid(p: PriorSpec, g: Grid, R=None) -> GridCopula:
    """Projection of the centering copula (or of Gaussian(R)) onto ``g``."""
    if R is not None:
        return project(Gaussian(np.asarray(R, dtype=float)), g)
    c = base_prior(p).centering
    if isinstance(c, Independence):
        return GridCopula.independence(g)
    return project(c, g)


def distance(p: PriorSpec, C: GridCopula, C0: GridCopula) -> float:
    """The quadratic discrepancy v' Q v between C and the centering C0."""
    if C.grid != C0.grid:
        raise GridMismatch("copula and centering must share a grid")
    v = (C.mass - C0.mass).ravel()
    Q = precision_matrix(p, C.grid)
    return float(v @ (Q @ v))


def log_prior_kernel(p: PriorSpec, C: GridCopula, C0: GridCopula) -> float:
    a = alpha_from_star(p.alpha_star, C.grid)
    if a == 0.0:
        return 0.0
    return -0.5 * a * distance(p, C, C0)


def delta_log_prior(p: PriorSpec, C: GridCopula, C0: GridCopula, prop: ExchangeProposal) -> float:
    """Change of the log kernel caused by ``prop``, using only the touched rows of Q."""
    if C.grid != C0.grid:
        raise GridMismatch("copula and centering must share a grid")
    a = alpha_from_star(p.alpha_star, C.grid)
    if a == 0.0 or prop.epsilon == 0.0:
        return 0.0
    g = C.grid
    Q = precision_matrix(p, g)
    cells = [g.flat_index(c) for c in prop.site.cells(g)]
    delta = {c: s * prop.epsilon for c, s in zip(cells, _PATTERN)}
    v = (C.mass - C0.mass).ravel()
    change = 0.0
    for c, dc in delta.items():
        lo, hi = Q.indptr[c], Q.indptr[c + 1]
        cols = Q.indices[lo:hi]
        vals = Q.data[lo:hi]
        change += 2.0 * dc * float(vals @ v[cols])
        for col, q in zip(cols, vals):
            if col in delta:
                change += dc * q * delta[col]
    return -0.5 * a * change


def hierarchical_R_log_ratio(inner: BasePrior, C: GridCopula, g: Grid, R_old, R_new) -> float:
    """Log acceptance ratio (prior part) of moving the centering from R_old to R_new."""
    if C.grid != g:
        raise GridMismatch("copula grid differs from g")
    a = alpha_from_star(inner.alpha_star, g)
    if a == 0.0:
        return 0.0
    d_old = distance(inner, C, project(Gaussian(np.asarray(R_old, dtype=float)), g))
    d_new = distance(inner, C, project(Gaussian(np.asarray(R_new, dtype=float)), g))
    return 0.5 * a * (d_old - d_new)
