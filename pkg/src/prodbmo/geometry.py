"""Dyadic intervals, rectangles, grids and cell-union open sets on the torus.

Everything here is exact: lengths and translations are ``Fraction`` values and
translations are restricted to multiples of the finest cell width, so that a
translated dyadic interval is always a union of finest cells (possibly wrapping
around 1).
"""
from __future__ import annotations

import itertools
import os
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterator, Sequence

import numpy as np

from .errors import CapacityError, ResolutionError

DEFAULT_EXACT_CAP = 16


def exact_cap(cap: int | None = None) -> int:
    """Cell-count limit for brute-force open-set enumeration.

    An explicit ``cap`` wins, then the ``PBMO_EXACT_CAP`` environment variable,
    then the default of 16 cells.
    """
    if cap is not None:
        return int(cap)
    env = os.environ.get("PBMO_EXACT_CAP")
    if env:
        return int(env)
    return DEFAULT_EXACT_CAP


def as_fraction(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, str):
        return Fraction(x.strip())
    return Fraction(x)


@dataclass(frozen=True, order=True)
class DyadicInterval:
    """The dyadic interval ``[index 2^-level, (index+1) 2^-level) + shift`` mod 1."""

    level: int
    index: int
    shift: Fraction = Fraction(0)

    def __post_init__(self):
        if self.level < 0:
            raise ValueError(f"negative level {self.level}")
        if not 0 <= self.index < 2 ** self.level:
            raise ValueError(f"index {self.index} out of range for level {self.level}")
        object.__setattr__(self, "shift", as_fraction(self.shift) % 1)

    @property
    def length(self) -> Fraction:
        return Fraction(1, 2 ** self.level)

    @property
    def start(self) -> Fraction:
        return (Fraction(self.index, 2 ** self.level) + self.shift) % 1

    @property
    def wraps(self) -> bool:
        return self.start + self.length > 1

    @property
    def pieces(self) -> tuple[tuple[Fraction, Fraction], ...]:
        """Ordinary half-open intervals whose union is this one."""
        a, b = self.start, self.start + self.length
        if b <= 1:
            return ((a, b),)
        return ((a, Fraction(1)), (Fraction(0), b - 1))

    def parent(self) -> DyadicInterval:
        if self.level == 0:
            raise ValueError("[0,1) has no parent")
        return DyadicInterval(self.level - 1, self.index // 2, self.shift)

    def children(self) -> tuple[DyadicInterval, DyadicInterval]:
        return (DyadicInterval(self.level + 1, 2 * self.index, self.shift),
                DyadicInterval(self.level + 1, 2 * self.index + 1, self.shift))

    def ancestors(self) -> list[DyadicInterval]:
        """Strict dyadic ancestors, coarsest first."""
        return [DyadicInterval(j, self.index >> (self.level - j), self.shift)
                for j in range(self.level)]

    def contains(self, other: DyadicInterval) -> bool:
        if other.shift != self.shift or other.level < self.level:
            return False
        return other.index >> (other.level - self.level) == self.index

    def cell_indices(self, k: int) -> np.ndarray:
        """Indices of the finest cells (width ``2^-k``) covered, in torus order."""
        if self.level > k:
            raise ResolutionError(f"interval level {self.level} finer than resolution {k}")
        s = self.shift * 2 ** k
        if s.denominator != 1:
            raise ResolutionError(f"shift {self.shift} is not a multiple of 2^-{k}")
        width = 2 ** (k - self.level)
        return (self.index * width + int(s) + np.arange(width)) % 2 ** k

    def __str__(self):
        a, b = self.start, self.start + self.length
        if self.wraps:
            return f"[{a},1)u[0,{b - 1})"
        return f"[{a},{b})"


@dataclass(frozen=True, order=True)
class DyadicRectangle:
    axes: tuple[DyadicInterval, ...]

    def __post_init__(self):
        object.__setattr__(self, "axes", tuple(self.axes))

    @classmethod
    def from_pairs(cls, pairs, shift=None) -> DyadicRectangle:
        """Build from ``[(level, index), ...]`` with an optional per-axis shift."""
        shift = shift or [0] * len(pairs)
        return cls(tuple(DyadicInterval(j, m, s) for (j, m), s in zip(pairs, shift)))

    @property
    def N(self) -> int:
        return len(self.axes)

    @property
    def levels(self) -> tuple[int, ...]:
        return tuple(I.level for I in self.axes)

    @property
    def measure(self) -> Fraction:
        out = Fraction(1)
        for I in self.axes:
            out *= I.length
        return out

    def contains(self, other: DyadicRectangle) -> bool:
        return all(a.contains(b) for a, b in zip(self.axes, other.axes))

    def mask(self, grid: Grid) -> np.ndarray:
        """Boolean cell mask of shape ``grid.shape``."""
        out = np.zeros(grid.shape, dtype=bool)
        out[np.ix_(*[I.cell_indices(k) for I, k in zip(self.axes, grid.levels)])] = True
        return out

    def as_pairs(self):
        return [[I.level, I.index] for I in self.axes]

    def __str__(self):
        return "x".join(str(I) for I in self.axes)


@dataclass(frozen=True)
class Grid:
    """Finest-cell resolution ``levels`` per axis, with dyadic system translated by ``alpha``."""

    levels: tuple[int, ...]
    alpha: tuple[Fraction, ...] = None

    def __post_init__(self):
        levels = tuple(int(k) for k in self.levels)
        if not levels:
            raise ValueError("a grid needs at least one axis")
        if any(k < 0 for k in levels):
            raise ValueError(f"negative resolution in {levels}")
        alpha = self.alpha if self.alpha is not None else (0,) * len(levels)
        if len(alpha) != len(levels):
            raise ValueError("alpha must have one entry per axis")
        alpha = tuple(as_fraction(a) % 1 for a in alpha)
        for a, k in zip(alpha, levels):
            if (a * 2 ** k).denominator != 1:
                raise ValueError(f"translation {a} is not a multiple of the cell width 2^-{k}")
        object.__setattr__(self, "levels", levels)
        object.__setattr__(self, "alpha", alpha)

    @classmethod
    def parse(cls, text: str) -> Grid:
        """Parse the ``N:k1,..,kN`` command-line notation."""
        n, _, ks = text.partition(":")
        levels = tuple(int(k) for k in ks.split(",")) if ks else ()
        if len(levels) == 1 and int(n) > 1:
            levels = levels * int(n)
        if len(levels) != int(n):
            raise ValueError(f"grid spec {text!r}: expected {n} levels")
        return cls(levels)

    @property
    def N(self) -> int:
        return len(self.levels)

    @property
    def shape(self) -> tuple[int, ...]:
        return tuple(2 ** k for k in self.levels)

    @property
    def ncells(self) -> int:
        return int(np.prod(self.shape))

    @property
    def cell_measure(self) -> float:
        return 2.0 ** -sum(self.levels)

    @property
    def shift_cells(self) -> tuple[int, ...]:
        return tuple(int(a * 2 ** k) for a, k in zip(self.alpha, self.levels))

    @property
    def is_standard(self) -> bool:
        return not any(self.alpha)

    def translated(self, alpha) -> Grid:
        """Same resolution, dyadic system translated to ``alpha``."""
        return Grid(self.levels, tuple(alpha))

    def standard(self) -> Grid:
        return Grid(self.levels)

    def sub(self, axes: Sequence[int]) -> Grid:
        return Grid(tuple(self.levels[a] for a in axes), tuple(self.alpha[a] for a in axes))

    def interval(self, axis: int, level: int, index: int) -> DyadicInterval:
        return DyadicInterval(level, index, self.alpha[axis])

    def rectangle(self, pairs) -> DyadicRectangle:
        return DyadicRectangle.from_pairs(pairs, self.alpha)

    def to_dict(self):
        return {"N": self.N, "levels": list(self.levels), "alpha": [str(a) for a in self.alpha]}


def translate_cell(cell: tuple[int, ...], grid: Grid, alpha) -> tuple[int, ...]:
    """Label of ``cell`` after moving it by ``alpha`` on the torus."""
    out = []
    for c, a, k in zip(cell, alpha, grid.levels):
        s = as_fraction(a) * 2 ** k
        if s.denominator != 1:
            raise ValueError(f"translation {a} is not a multiple of 2^-{k}")
        out.append((c + int(s)) % 2 ** k)
    return tuple(out)


@dataclass(frozen=True)
class OpenSetApprox:
    """A union of finest cells standing in for an open set."""

    grid: Grid
    cells: frozenset = field(default_factory=frozenset)

    def __post_init__(self):
        cells = frozenset(tuple(int(x) for x in c) for c in self.cells)
        for c in cells:
            if len(c) != self.grid.N or any(not 0 <= x < n for x, n in zip(c, self.grid.shape)):
                raise ValueError(f"cell {c} outside grid {self.grid.shape}")
        object.__setattr__(self, "cells", cells)

    @classmethod
    def from_mask(cls, grid: Grid, mask) -> OpenSetApprox:
        mask = np.asarray(mask, dtype=bool).reshape(grid.shape)
        return cls(grid, frozenset(map(tuple, np.argwhere(mask))))

    @classmethod
    def from_flat(cls, grid: Grid, flat) -> OpenSetApprox:
        return cls(grid, frozenset(np.unravel_index(i, grid.shape) for i in flat))

    @classmethod
    def from_rectangles(cls, grid: Grid, rects) -> OpenSetApprox:
        mask = np.zeros(grid.shape, dtype=bool)
        for R in rects:
            mask |= R.mask(grid)
        return cls.from_mask(grid, mask)

    @property
    def mask(self) -> np.ndarray:
        out = np.zeros(self.grid.shape, dtype=bool)
        for c in self.cells:
            out[c] = True
        return out

    @property
    def measure(self) -> float:
        return len(self.cells) * self.grid.cell_measure

    @property
    def flat(self) -> tuple[int, ...]:
        return tuple(sorted(int(np.ravel_multi_index(c, self.grid.shape)) for c in self.cells))

    def key(self):
        """Lexicographic ordering key: the sorted row-major cell numbers."""
        return self.flat

    def contains(self, R: DyadicRectangle) -> bool:
        return bool(np.all(self.mask[R.mask(self.grid)]))

    def __and__(self, other: OpenSetApprox) -> OpenSetApprox:
        return OpenSetApprox(self.grid, self.cells & other.cells)

    def __or__(self, other: OpenSetApprox) -> OpenSetApprox:
        return OpenSetApprox(self.grid, self.cells | other.cells)

    def __len__(self):
        return len(self.cells)

    def to_json(self):
        return sorted(list(c) for c in self.cells)


def rectangles_of_generation(grid: Grid, j: Sequence[int]) -> list[DyadicRectangle]:
    """All rectangles of generation ``j`` (side ``2^-j_a`` on axis ``a``)."""
    j = tuple(int(x) for x in j)
    if len(j) != grid.N:
        raise ValueError(f"generation {j} has wrong length for N={grid.N}")
    for ja, ka in zip(j, grid.levels):
        if not 0 <= ja <= ka:
            raise ResolutionError(f"generation {j} exceeds resolution {grid.levels}")
    return [DyadicRectangle(tuple(grid.interval(a, ja, m) for a, (ja, m) in enumerate(zip(j, idx))))
            for idx in itertools.product(*[range(2 ** ja) for ja in j])]


def all_dyadic_rectangles(grid: Grid) -> list[DyadicRectangle]:
    """Every dyadic rectangle of the grid, levels ``0..k_a`` on each axis."""
    per_axis = [[grid.interval(a, j, m) for j in range(k + 1) for m in range(2 ** j)]
                for a, k in enumerate(grid.levels)]
    return [DyadicRectangle(axes) for axes in itertools.product(*per_axis)]


def enumerate_open_sets(grid: Grid, cap: int | None = None) -> Iterator[OpenSetApprox]:
    """Yield every nonempty union of finest cells, ordered by bitmask value."""
    cap = exact_cap(cap)
    n = grid.ncells
    if n > cap:
        raise CapacityError(
            f"{n} cells exceed the exact enumeration cap of {cap}; "
            "use the heuristic search (mode='heuristic') in prodbmo.norms")
    for bits in range(1, 2 ** n):
        yield OpenSetApprox.from_flat(grid, [i for i in range(n) if bits >> i & 1])


def rectangles_contained(omega: OpenSetApprox) -> list[DyadicRectangle]:
    """All dyadic rectangles whose cells lie inside ``omega`` (a down-closed family)."""
    mask = omega.mask
    return [R for R in all_dyadic_rectangles(omega.grid) if mask[R.mask(omega.grid)].all()]
