"""Orthogonal grids on the unit hypercube.

A grid stores, for every dimension, the ordered cut points of that axis
without the implicit lower bound 0; the last cut is always exactly 1.
Cells are half-open boxes ``(lo, hi]`` and are indexed by 0-based tuples.
Coordinate value 0 belongs to the first interval so that point location is
total on ``[0, 1]^d``.

Cell enumeration is lexicographic with the first dimension varying slowest,
which is numpy's C order for an array of shape ``grid.shape``.
"""

from __future__ import annotations

from functools import cached_property
from typing import Sequence

import numpy as np

from .errors import DimensionMismatch, DomainError, ValidationError

__all__ = [
    "Grid",
    "build_grid",
    "uniform_grid",
    "cell_volume",
    "neighbors",
    "locate",
    "refine",
    "common_refinement",
]


class Grid:
    """Immutable orthogonal partition of ``[0, 1]^d``."""

    def __init__(self, cuts: Sequence[Sequence[float]]):
        if len(cuts) < 2:
            raise ValidationError(f"a grid needs at least 2 dimensions, got {len(cuts)}")
        checked = []
        for i, seq in enumerate(cuts):
            arr = np.asarray(seq, dtype=float)
            if arr.ndim != 1 or arr.size == 0:
                raise ValidationError(f"dimension {i}: cut list must be a nonempty sequence")
            if not np.all(np.isfinite(arr)):
                raise ValidationError(f"dimension {i}: cuts must be finite")
            if arr[0] <= 0.0 or arr[-1] > 1.0:
                raise ValidationError(f"dimension {i}: cuts must lie in (0, 1]")
            if arr[-1] != 1.0:
                raise ValidationError(f"dimension {i}: last cut must be exactly 1")
            diffs = np.diff(arr)
            if np.any(diffs == 0):
                raise ValidationError(f"dimension {i}: duplicate cut")
            if np.any(diffs < 0):
                raise ValidationError(f"dimension {i}: cuts must be strictly increasing")
            checked.append(tuple(float(x) for x in arr))
        self.cuts: tuple[tuple[float, ...], ...] = tuple(checked)

    def __repr__(self) -> str:
        return f"Grid(shape={self.shape})"

    def __eq__(self, other: object) -> bool:
        return isinstance(other, Grid) and self.cuts == other.cuts

    def __hash__(self) -> int:
        return hash(self.cuts)

    def __setattr__(self, name, value):
        if name == "cuts" and "cuts" in self.__dict__:
            raise AttributeError("Grid is immutable")
        super().__setattr__(name, value)

    @property
    def dims(self) -> int:
        return len(self.cuts)

    @cached_property
    def shape(self) -> tuple[int, ...]:
        return tuple(len(c) for c in self.cuts)

    @cached_property
    def n_cells(self) -> int:
        return int(np.prod(self.shape))

    def edges(self, dim: int) -> np.ndarray:
        """Cut points of ``dim`` with the leading 0 included."""
        return self._edges[dim]

    def widths(self, dim: int) -> np.ndarray:
        return self._widths[dim]

    @cached_property
    def _edges(self) -> tuple[np.ndarray, ...]:
        out = []
        for c in self.cuts:
            e = np.concatenate(([0.0], c))
            e.flags.writeable = False
            out.append(e)
        return tuple(out)

    @cached_property
    def _widths(self) -> tuple[np.ndarray, ...]:
        out = []
        for e in self._edges:
            w = np.diff(e)
            w.flags.writeable = False
            out.append(w)
        return tuple(out)

    @cached_property
    def volumes(self) -> np.ndarray:
        """Cell volumes as an array of shape ``self.shape``."""
        vol = self._widths[0]
        for w in self._widths[1:]:
            vol = np.multiply.outer(vol, w)
        vol = np.ascontiguousarray(vol)
        vol.flags.writeable = False
        return vol

    def centers(self, dim: int) -> np.ndarray:
        e = self._edges[dim]
        return 0.5 * (e[:-1] + e[1:])

    def check_index(self, cell: Sequence[int]) -> tuple[int, ...]:
        cell = tuple(int(k) for k in cell)
        if len(cell) != self.dims:
            raise IndexError(f"cell index has {len(cell)} components, grid has {self.dims} dimensions")
        for i, (k, m) in enumerate(zip(cell, self.shape)):
            if not 0 <= k < m:
                raise IndexError(f"dimension {i}: interval index {k} out of range [0, {m})")
        return cell

    def cells(self):
        """Iterate over all cell indices in enumeration order."""
        return np.ndindex(*self.shape)

    def flat_index(self, cell: Sequence[int]) -> int:
        return int(np.ravel_multi_index(self.check_index(cell), self.shape))


def build_grid(cuts_per_dim: Sequence[Sequence[float]]) -> Grid:
    return Grid(cuts_per_dim)


def uniform_grid(d: int, m: int) -> Grid:
    """Evenly spaced grid with ``m`` intervals in each of ``d`` dimensions."""
    if int(d) != d or int(m) != m:
        raise ValidationError("d and m must be integers")
    if d < 2:
        raise ValidationError(f"d must be at least 2, got {d}")
    if m < 1:
        raise ValidationError(f"m must be positive, got {m}")
    cuts = np.arange(1, m + 1) / m
    cuts[-1] = 1.0
    return Grid([cuts] * int(d))


def cell_volume(g: Grid, c: Sequence[int]) -> float:
    c = g.check_index(c)
    return float(np.prod([g.widths(i)[k] for i, k in enumerate(c)]))


def neighbors(g: Grid, c: Sequence[int]) -> list[tuple[int, ...]]:
    """Von Neumann neighbours: cells differing by one step in one coordinate."""
    c = g.check_index(c)
    out = []
    for i, m in enumerate(g.shape):
        for step in (-1, 1):
            k = c[i] + step
            if 0 <= k < m:
                out.append(c[:i] + (k,) + c[i + 1:])
    return out


def locate(g: Grid, u) -> tuple[int, ...] | np.ndarray:
    """Cell index of a point, or an ``(n, d)`` integer array for ``n`` points.

    Uses the half-open ``(lo, hi]`` convention with 0 mapped to the first
    interval.
    """
    u = np.asarray(u, dtype=float)
    single = u.ndim == 1
    pts = np.atleast_2d(u)
    if pts.shape[1] != g.dims:
        raise DimensionMismatch(f"points have {pts.shape[1]} coordinates, grid has {g.dims}")
    if np.any(np.isnan(pts)) or np.any(pts < 0.0) or np.any(pts > 1.0):
        raise DomainError("coordinates must lie in [0, 1]")
    idx = np.empty(pts.shape, dtype=np.int64)
    for i in range(g.dims):
        idx[:, i] = np.searchsorted(g.cuts[i], pts[:, i], side="left")
    if single:
        return tuple(int(k) for k in idx[0])
    return idx


def refine(g: Grid, dim: int, new_cut: float) -> Grid:
    """Grid with one extra cut in dimension ``dim``."""
    if not 0 <= dim < g.dims:
        raise ValidationError(f"dimension {dim} out of range for a {g.dims}-d grid")
    new_cut = float(new_cut)
    if not 0.0 < new_cut < 1.0:
        raise ValidationError(f"dimension {dim}: new cut {new_cut} must lie in (0, 1)")
    if new_cut in g.cuts[dim]:
        raise ValidationError(f"dimension {dim}: duplicate cut {new_cut}")
    cuts = list(g.cuts)
    cuts[dim] = tuple(sorted(g.cuts[dim] + (new_cut,)))
    return Grid(cuts)


def common_refinement(g1: Grid, g2: Grid) -> Grid:
    """Per-dimension union of the cut sets of two grids."""
    if g1.dims != g2.dims:
        raise DimensionMismatch(f"cannot refine a {g1.dims}-d grid with a {g2.dims}-d grid")
    if g1 == g2:
        return g1
    return Grid([sorted(set(a) | set(b)) for a, b in zip(g1.cuts, g2.cuts)])


def refine_uniformly(g: Grid, factor: int) -> Grid:
    """Split every interval into ``factor`` equal pieces."""
    if factor < 1:
        raise ValidationError("refinement factor must be positive")
    cuts = []
    for e in g._edges:
        pts = [lo + (hi - lo) * k / factor for lo, hi in zip(e[:-1], e[1:]) for k in range(1, factor)]
        cuts.append(sorted(set(pts) | set(e[1:])))
    return Grid(cuts)
