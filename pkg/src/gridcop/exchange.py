"""Rectangle exchanges on grid-uniform copulas.

An exchange picks two dimensions ``i < j``, an interval for every other
dimension, two intervals ``a1, a2`` along ``i`` and ``b1, b2`` along ``j``,
and moves mass ``eps`` by the pattern (-eps, +eps, +eps, -eps) over the cells
(a1,b1), (a1,b2), (a2,b1), (a2,b2). Every one-dimensional margin is
unchanged, so the result is again a grid-uniform copula.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels
from .copula import CHAIN_TOL, GridCopula
from .errors import DegenerateGrid, EpsilonOutOfRange, GridMismatch
from .grid import Grid


@dataclass(frozen=True)
class ExchangeSite:
    dim_i: int
    dim_j: int
    fixed: tuple[int, ...]  # interval index of every other dimension, in dimension order
    a1: int
    a2: int
    b1: int
    b2: int

    def cells(self, grid: Grid) -> list[tuple[int, ...]]:
        """Indices of the cells (a1,b1), (a1,b2), (a2,b1), (a2,b2)."""
        if not 0 <= self.dim_i < self.dim_j < grid.dims:
            raise IndexError(f"invalid exchange dimensions ({self.dim_i}, {self.dim_j})")
        if self.a1 == self.a2 or self.b1 == self.b2:
            raise IndexError("exchange needs two distinct intervals in each dimension")
        if len(self.fixed) != grid.dims - 2:
            raise IndexError(f"need {grid.dims - 2} fixed coordinates, got {len(self.fixed)}")
        out = []
        for a, b in ((self.a1, self.b1), (self.a1, self.b2), (self.a2, self.b1), (self.a2, self.b2)):
            rest = iter(self.fixed)
            idx = tuple(a if k == self.dim_i else b if k == self.dim_j else next(rest) for k in range(grid.dims))
            out.append(grid.check_index(idx))
        return out


@dataclass(frozen=True)
class ExchangeProposal:
    site: ExchangeSite
    epsilon: float

    def reverse(self) -> "ExchangeProposal":
        return ExchangeProposal(self.site, -self.epsilon)


_PATTERN = (-1.0, 1.0, 1.0, -1.0)


def epsilon_interval(C: GridCopula, s: ExchangeSite) -> tuple[float, float]:
    m11, m12, m21, m22 = (C.mass[c] for c in s.cells(C.grid))
    return float(max(-m12, -m21)), float(min(m11, m22))


def apply_exchange(C: GridCopula, p: ExchangeProposal, tol: float | None = CHAIN_TOL) -> GridCopula:
    lo, hi = epsilon_interval(C, p.site)
    if not lo <= p.epsilon <= hi:
        raise EpsilonOutOfRange(f"epsilon {p.epsilon!r} outside [{lo!r}, {hi!r}]")
    mass = C.mass.copy()
    for c, sign in zip(p.site.cells(C.grid), _PATTERN):
        mass[c] += sign * p.epsilon
    return GridCopula(C.grid, mass, tol=tol)


def _eligible_dims(grid: Grid) -> list[int]:
    return [i for i, m in enumerate(grid.shape) if m >= 2]


def random_site(grid: Grid, rng: np.random.Generator) -> ExchangeSite:
    elig = _eligible_dims(grid)
    if len(elig) < 2:
        raise DegenerateGrid(f"grid {grid.shape} has fewer than two dimensions with 2+ intervals")
    i, j = sorted(rng.choice(elig, size=2, replace=False))
    fixed = tuple(int(rng.integers(m)) for k, m in enumerate(grid.shape) if k not in (i, j))
    a1, a2 = sorted(rng.choice(grid.shape[i], size=2, replace=False))
    b1, b2 = sorted(rng.choice(grid.shape[j], size=2, replace=False))
    return ExchangeSite(int(i), int(j), fixed, int(a1), int(a2), int(b1), int(b2))


def random_exchange(C: GridCopula, rng: np.random.Generator) -> ExchangeProposal:
    """Uniform site, then epsilon uniform on its valid interval."""
    site = random_site(C.grid, rng)
    lo, hi = epsilon_interval(C, site)
    eps = min(max(lo + (hi - lo) * rng.random(), lo), hi)
    return ExchangeProposal(site, float(eps))


def grid_layout(grid: Grid) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Shape, element strides and eligible dimensions for the kernels."""
    shape = np.asarray(grid.shape, dtype=np.int64)
    strides = np.ones(grid.dims, dtype=np.int64)
    for k in range(grid.dims - 2, -1, -1):
        strides[k] = strides[k + 1] * shape[k + 1]
    elig = np.asarray(_eligible_dims(grid), dtype=np.int64)
    if elig.size < 2:
        raise DegenerateGrid(f"grid {grid.shape} has fewer than two dimensions with 2+ intervals")
    return shape, strides, elig


def random_walk(C: GridCopula, n_steps: int, rng: np.random.Generator) -> GridCopula:
    """Result of ``n_steps`` unconditional random exchanges (no validation)."""
    shape, strides, elig = grid_layout(C.grid)
    mass = C.flat.copy()
    _kernels.seed(int(rng.integers(2**32)))
    _kernels.random_walk(mass, shape, strides, elig, int(n_steps))
    return GridCopula(C.grid, mass, tol=None)


def exchange_sequence_to(C: GridCopula, D: GridCopula, atol: float = 1e-15) -> list[ExchangeProposal]:
    """Finite list of exchanges turning ``C`` into ``D`` (2-d, shared grid).

    Columns are fixed left to right. In column ``k`` a cell with excess mass
    (row ``hi``) and one with a deficit (row ``lo``) are paired with a later
    column ``l`` where row ``lo`` still holds mass; the exchange on rows
    (hi, lo) and columns (k, l) moves mass into the deficit cell without
    touching the columns already fixed. Row ``lo`` always has enough mass
    to the right of ``k`` because its row total matches ``D``.
    """
    if C.grid != D.grid:
        raise GridMismatch("copulas must share the same grid")
    if C.dims != 2:
        raise GridMismatch("exchange sequences are constructed for 2-d copulas only")
    m1, m2 = C.grid.shape
    cur = np.array(C.mass, dtype=float)
    target = D.mass
    seq: list[ExchangeProposal] = []
    max_steps = 2 * m1 * m2 * m2
    for k in range(m2 - 1):
        while len(seq) <= max_steps:
            diff = cur[:, k] - target[:, k]
            if np.all(np.abs(diff) <= atol):
                break
            hi = int(np.argmax(diff))
            lo = int(np.argmin(diff))
            if diff[hi] <= atol or diff[lo] >= -atol:
                break
            cols = [l for l in range(k + 1, m2) if cur[lo, l] > atol]
            if not cols:
                break
            l = cols[0]
            eps = min(diff[hi], -diff[lo], cur[lo, l])
            # rows (a1, a2) = (hi, lo), columns (b1, b2) = (k, l)
            a1, a2 = hi, lo
            s = ExchangeSite(0, 1, (), a1, a2, k, l)
            cur[a1, k] -= eps
            cur[a1, l] += eps
            cur[a2, k] += eps
            cur[a2, l] -= eps
            seq.append(ExchangeProposal(s, float(eps)))
    return seq
