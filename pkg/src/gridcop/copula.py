"""Grid-uniform copulas: constant density on every cell of a grid."""

from __future__ import annotations

from typing import TYPE_CHECKING

import numpy as np

from .errors import DimensionMismatch, DomainError, NumericalError, ValidationError
from .grid import Grid, common_refinement, locate, refine

if TYPE_CHECKING:
    from .reference import ReferenceCopula

# construction-time check vs. after long chains of exchanges
BUILD_TOL = 1e-10
CHAIN_TOL = 1e-9


class GridCopula:
    """A grid plus one probability per cell.

    ``mass`` is a read-only array of shape ``grid.shape``; its C-order
    flattening is the enumeration order used for persistence.
    """

    def __init__(self, grid: Grid, mass, tol: float | None = BUILD_TOL):
        mass = np.array(mass, dtype=float).reshape(grid.shape)
        mass.flags.writeable = False
        self.grid = grid
        self.mass = mass
        if tol is not None:
            self.validate(tol)

    def __repr__(self) -> str:
        return f"GridCopula(shape={self.grid.shape})"

    @classmethod
    def independence(cls, grid: Grid) -> "GridCopula":
        return cls(grid, grid.volumes)

    @property
    def dims(self) -> int:
        return self.grid.dims

    @property
    def flat(self) -> np.ndarray:
        return self.mass.ravel()

    def densities(self) -> np.ndarray:
        """Cell densities (mass over volume), shape ``grid.shape``."""
        return self.mass / self.grid.volumes

    def margin_deviation(self) -> float:
        """Largest violation of marginal uniformity over all dimensions."""
        dev = 0.0
        for i in range(self.dims):
            axes = tuple(k for k in range(self.dims) if k != i)
            dev = max(dev, float(np.max(np.abs(self.mass.sum(axis=axes) - self.grid.widths(i)))))
        return dev

    def validate(self, tol: float = BUILD_TOL) -> None:
        if not np.all(np.isfinite(self.mass)):
            raise ValidationError("cell masses must be finite")
        if np.any(self.mass < 0):
            raise ValidationError(f"negative cell mass {self.mass.min():.3g}")
        total = self.mass.sum()
        if abs(total - 1.0) > tol:
            raise ValidationError(f"total mass {total!r} differs from 1 by more than {tol}")
        dev = self.margin_deviation()
        if dev > tol:
            raise ValidationError(f"marginals deviate from uniform by {dev:.3g} (tolerance {tol})")

    def is_valid(self, tol: float = CHAIN_TOL) -> bool:
        try:
            self.validate(tol)
        except ValidationError:
            return False
        return True


def _as_points(C: GridCopula, u) -> tuple[np.ndarray, bool]:
    u = np.asarray(u, dtype=float)
    single = u.ndim == 1
    pts = np.atleast_2d(u)
    if pts.shape[1] != C.dims:
        raise DimensionMismatch(f"points have {pts.shape[1]} coordinates, copula has {C.dims}")
    if np.any(np.isnan(pts)) or np.any(pts < 0.0) or np.any(pts > 1.0):
        raise DomainError("coordinates must lie in [0, 1]")
    return pts, single


def density(C: GridCopula, u):
    """Copula density at one point or at each row of an ``(n, d)`` array."""
    pts, single = _as_points(C, u)
    idx = locate(C.grid, pts)
    dens = C.densities()[tuple(idx.T)]
    return float(dens[0]) if single else dens


def cdf(C: GridCopula, u):
    """Exact CDF: full cells plus volume-proportional parts of partial cells."""
    pts, single = _as_points(C, u)
    g = C.grid
    out = np.empty(len(pts))
    for n, p in enumerate(pts):
        acc = C.mass
        # contract one axis at a time with the covered fraction of each interval
        for i in range(g.dims):
            e = g.edges(i)
            frac = np.clip((p[i] - e[:-1]) / (e[1:] - e[:-1]), 0.0, 1.0)
            acc = np.tensordot(frac, acc, axes=(0, 0))
        out[n] = float(acc)
    return float(out[0]) if single else out


def project(ref: "ReferenceCopula", g: Grid, neg_tol: float = 1e-9) -> GridCopula:
    """Cell probabilities of ``ref`` on ``g`` by corner inclusion-exclusion."""
    if ref.dims != g.dims:
        raise DimensionMismatch(f"reference copula is {ref.dims}-d, grid is {g.dims}-d")
    mesh = np.meshgrid(*[g.edges(i) for i in range(g.dims)], indexing="ij")
    corners = np.stack([m.ravel() for m in mesh], axis=1)
    F = np.asarray(ref.cdf(corners), dtype=float).reshape(mesh[0].shape)
    mass = F
    for i in range(g.dims):
        mass = np.diff(mass, axis=i)
    if mass.min() < -neg_tol:
        raise NumericalError(
            f"inclusion-exclusion gave mass {mass.min():.3g}; the reference CDF is not a valid copula"
        )
    mass = np.clip(mass, 0.0, None)
    mass = mass / mass.sum()
    return GridCopula(g, mass, tol=CHAIN_TOL)


def grid_division(C: GridCopula, dim: int, new_cut: float) -> GridCopula:
    """Same distribution on a grid with one extra cut in ``dim``."""
    g2 = refine(C.grid, dim, new_cut)
    e = C.grid.edges(dim)
    k = int(np.searchsorted(C.grid.cuts[dim], new_cut, side="left"))
    xi = (new_cut - e[k]) / (e[k + 1] - e[k])
    sl = np.take(C.mass, [k], axis=dim)
    parts = [np.take(C.mass, range(k), axis=dim), xi * sl, (1.0 - xi) * sl,
             np.take(C.mass, range(k + 1, C.grid.shape[dim]), axis=dim)]
    return GridCopula(g2, np.concatenate(parts, axis=dim), tol=None)


def to_grid(C: GridCopula, target: Grid) -> GridCopula:
    """Re-express ``C`` on a refinement ``target`` of its grid.

    Every cut of ``C.grid`` must be present in ``target``.
    """
    if target == C.grid:
        return C
    if target.dims != C.dims:
        raise DimensionMismatch("target grid has a different dimension")
    mass = C.mass
    for i in range(C.dims):
        old = C.grid.cuts[i]
        new = np.asarray(target.cuts[i])
        if not set(old) <= set(target.cuts[i]):
            raise ValidationError(f"dimension {i}: target grid does not refine the copula grid")
        parent = np.searchsorted(old, new, side="left")
        new_w = target.widths(i)
        frac = new_w / C.grid.widths(i)[parent]
        shape = [1] * C.dims
        shape[i] = -1
        mass = np.take(mass, parent, axis=i) * frac.reshape(shape)
    return GridCopula(target, mass, tol=None)


def on_common_grid(C1: GridCopula, C2: GridCopula) -> tuple[GridCopula, GridCopula]:
    if C1.dims != C2.dims:
        raise DimensionMismatch(f"copulas have dimensions {C1.dims} and {C2.dims}")
    g = common_refinement(C1.grid, C2.grid)
    return to_grid(C1, g), to_grid(C2, g)


def bivariate_margin(C: GridCopula, i: int, j: int) -> GridCopula:
    """The 2-d grid copula of coordinates ``i < j``."""
    if not 0 <= i < j < C.dims:
        raise IndexError(f"need 0 <= i < j < {C.dims}, got ({i}, {j})")
    if C.dims == 2:
        return C
    axes = tuple(k for k in range(C.dims) if k not in (i, j))
    g = Grid([C.grid.cuts[i], C.grid.cuts[j]])
    return GridCopula(g, C.mass.sum(axis=axes), tol=CHAIN_TOL)
