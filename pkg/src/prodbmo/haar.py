"""Step functions on dyadic grids and their exact tensor Haar analysis.

A :class:`GridFunction` stores one value per finest cell in standard torus
coordinates. Its dyadic system is the one of ``grid`` (possibly translated), so
every transform first rolls the values into the grid's own frame.

Spectra use the pyramid layout per axis: slot 0 is the constant function and
slot ``2^j + m`` is the Haar function of the ``m``-th interval of level ``j``.
With this layout a spectrum has the same array shape as the function it came
from. Haar functions are positive on the left half of their interval.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Sequence

import numpy as np

from .errors import ResolutionError
from .geometry import DyadicInterval, DyadicRectangle, Grid, OpenSetApprox

CONST = "CONST"

HAAR = "haar"
MEAN = "mean"


class GridFunction:
    """A real step function, constant on the finest cells of ``grid``."""

    __slots__ = ("grid", "values")

    def __init__(self, grid: Grid, values):
        values = np.array(values, dtype=float)
        if values.size != grid.ncells:
            raise ValueError(f"{values.size} values for a grid of {grid.ncells} cells")
        values = values.reshape(grid.shape)
        values.flags.writeable = False
        self.grid = grid
        self.values = values

    @classmethod
    def zeros(cls, grid: Grid) -> GridFunction:
        return cls(grid, np.zeros(grid.shape))

    @classmethod
    def constant(cls, grid: Grid, c: float) -> GridFunction:
        return cls(grid, np.full(grid.shape, float(c)))

    @classmethod
    def from_aligned(cls, grid: Grid, arr) -> GridFunction:
        """Inverse of :meth:`aligned`."""
        return cls(grid, np.roll(arr, grid.shift_cells, axis=tuple(range(grid.N))))

    def aligned(self) -> np.ndarray:
        """Values re-indexed so the grid's dyadic intervals are the standard ones."""
        if self.grid.is_standard:
            return self.values
        return np.roll(self.values, [-s for s in self.grid.shift_cells], axis=tuple(range(self.grid.N)))

    def on_grid(self, grid: Grid) -> GridFunction:
        """The same cell values viewed through another dyadic system of equal resolution."""
        if grid.levels != self.grid.levels:
            raise ValueError(f"resolution mismatch {grid.levels} vs {self.grid.levels}")
        return GridFunction(grid, self.values)

    def integral(self) -> float:
        return float(self.values.mean())

    def l2_norm(self) -> float:
        return float(np.sqrt(np.mean(self.values ** 2)))

    def sup_norm(self) -> float:
        return float(np.abs(self.values).max())

    def inner(self, other: GridFunction) -> float:
        _check_same_grid(self, other)
        return float(np.mean(self.values * other.values))

    def _binary(self, other, op):
        if isinstance(other, GridFunction):
            _check_same_grid(self, other)
            return GridFunction(self.grid, op(self.values, other.values))
        return GridFunction(self.grid, op(self.values, float(other)))

    def __add__(self, other):
        return self._binary(other, np.add)

    __radd__ = __add__

    def __sub__(self, other):
        return self._binary(other, np.subtract)

    def __mul__(self, other):
        return self._binary(other, np.multiply)

    __rmul__ = __mul__

    def __truediv__(self, other):
        return GridFunction(self.grid, self.values / float(other))

    def __neg__(self):
        return GridFunction(self.grid, -self.values)

    def allclose(self, other: GridFunction, atol=1e-12) -> bool:
        return self.grid == other.grid and np.allclose(self.values, other.values, rtol=0, atol=atol)

    def __repr__(self):
        return f"GridFunction(levels={self.grid.levels}, alpha={[str(a) for a in self.grid.alpha]})"


def _check_same_grid(f: GridFunction, g: GridFunction):
    if f.grid != g.grid:
        raise ValueError(f"grid mismatch: {f.grid} vs {g.grid}")


# ---------------------------------------------------------------- per-axis tables

@lru_cache(maxsize=None)
def axis_levels(k: int) -> np.ndarray:
    """Level of each pyramid slot; the constant slot gets level -1."""
    out = np.full(2 ** k, -1, dtype=int)
    for j in range(k):
        out[2 ** j: 2 ** (j + 1)] = j
    out.flags.writeable = False
    return out


@lru_cache(maxsize=None)
def haar_table(k: int) -> np.ndarray:
    """Values of the 1D augmented Haar basis on the ``2^k`` cells (rows are basis functions)."""
    n = 2 ** k
    W = np.zeros((n, n))
    W[0] = 1.0
    for j in range(k):
        w = n >> j
        for m in range(2 ** j):
            W[2 ** j + m, m * w: m * w + w // 2] = 2.0 ** (j / 2)
            W[2 ** j + m, m * w + w // 2: (m + 1) * w] = -2.0 ** (j / 2)
    W.flags.writeable = False
    return W


@lru_cache(maxsize=None)
def indicator_table(k: int) -> np.ndarray:
    """``chi_I`` on the cells for every pyramid slot (slot 0 is left empty)."""
    n = 2 ** k
    X = np.zeros((n, n))
    for j in range(k):
        w = n >> j
        for m in range(2 ** j):
            X[2 ** j + m, m * w: (m + 1) * w] = 1.0
    X.flags.writeable = False
    return X


@lru_cache(maxsize=None)
def pairing_tables(k: int):
    """Analysis and synthesis matrices for the two pairings ``h_I`` and ``chi_I/|I|``.

    ``analysis[mode] @ v`` gives the pairings of cell values ``v`` with every
    Haar-level interval; ``synthesis[mode].T @ c`` rebuilds ``sum_I c_I g_I``.
    Slot 0 is zero in all four matrices so only genuine dyadic intervals enter.
    """
    n = 2 ** k
    H = haar_table(k).copy()
    H[0] = 0.0
    X = indicator_table(k)
    inv_len = np.zeros(n)
    lv = axis_levels(k)
    inv_len[1:] = 2.0 ** lv[1:]
    M = X * inv_len[:, None]
    analysis = {HAAR: H / n, MEAN: M / n}
    synthesis = {HAAR: H, MEAN: M}
    return analysis, synthesis


def apply_axis(arr: np.ndarray, mat: np.ndarray, axis: int) -> np.ndarray:
    """Multiply ``arr`` by ``mat`` along ``axis`` (leading batch dims allowed)."""
    return np.moveaxis(np.tensordot(mat, arr, axes=([1], [axis])), 0, axis)


def pyramid_slot(I: DyadicInterval) -> int:
    return 2 ** I.level + I.index


def slot_interval(p: int, shift=0) -> DyadicInterval:
    j = int(p).bit_length() - 1
    return DyadicInterval(j, p - 2 ** j, shift)


# ---------------------------------------------------------------- spectra

class HaarSpectrum:
    """Coefficients of a grid function in the augmented tensor Haar basis."""

    __slots__ = ("grid", "coeffs")

    def __init__(self, grid: Grid, coeffs):
        coeffs = np.array(coeffs, dtype=float).reshape(grid.shape)
        coeffs.flags.writeable = False
        self.grid = grid
        self.coeffs = coeffs

    def _slot(self, axis: int, key) -> int:
        if key is CONST or key == CONST:
            return 0
        if key.shift != self.grid.alpha[axis]:
            raise ValueError(f"interval {key} is not in the grid's dyadic system on axis {axis}")
        if key.level >= self.grid.levels[axis]:
            raise ResolutionError(f"no Haar function at level {key.level} on axis {axis}")
        return pyramid_slot(key)

    def __getitem__(self, key) -> float:
        if isinstance(key, DyadicRectangle):
            key = key.axes
        if not isinstance(key, tuple):
            key = (key,)
        if len(key) != self.grid.N:
            raise ValueError(f"expected {self.grid.N} axis keys")
        return float(self.coeffs[tuple(self._slot(a, k) for a, k in enumerate(key))])

    def key_of(self, slots) -> tuple:
        return tuple(CONST if p == 0 else slot_interval(p, self.grid.alpha[a])
                     for a, p in enumerate(slots))

    def items(self, atol=0.0):
        """``(key, coefficient)`` pairs with ``|coefficient| > atol``, in pyramid order."""
        for slots in zip(*np.nonzero(np.abs(self.coeffs) > atol)):
            yield self.key_of(slots), float(self.coeffs[slots])

    def to_dict(self, atol=0.0) -> dict:
        out = {}
        for key, c in self.items(atol):
            out[tuple(str(k) for k in key) if self.grid.N > 1 else str(key[0])] = c
        return out

    def pure_mask(self) -> np.ndarray:
        """Entries whose every axis is a genuine Haar function."""
        return _pure_mask(self.grid.levels)

    def pure_part(self) -> HaarSpectrum:
        return HaarSpectrum(self.grid, np.where(self.pure_mask(), self.coeffs, 0.0))

    def sum_of_squares(self) -> float:
        return float(np.sum(self.coeffs ** 2))

    def __repr__(self):
        return f"HaarSpectrum(levels={self.grid.levels}, nonzero={np.count_nonzero(self.coeffs)})"


@lru_cache(maxsize=None)
def _pure_mask(levels: tuple[int, ...]) -> np.ndarray:
    out = np.ones(tuple(2 ** k for k in levels), dtype=bool)
    for a, k in enumerate(levels):
        shape = [1] * len(levels)
        shape[a] = 2 ** k
        out = out & (axis_levels(k) >= 0).reshape(shape)
    out.flags.writeable = False
    return out


def level_grids(levels: Sequence[int]) -> list[np.ndarray]:
    """Per-axis level arrays shaped for broadcasting against a spectrum."""
    out = []
    for a, k in enumerate(levels):
        shape = [1] * len(levels)
        shape[a] = 2 ** k
        out.append(axis_levels(k).reshape(shape))
    return out


def forward_haar(f: GridFunction) -> HaarSpectrum:
    arr = f.aligned()
    for a, k in enumerate(f.grid.levels):
        arr = apply_axis(arr, haar_table(k) / 2 ** k, a)
    return HaarSpectrum(f.grid, arr)


def inverse_haar(s: HaarSpectrum) -> GridFunction:
    arr = s.coeffs
    for a, k in enumerate(s.grid.levels):
        arr = apply_axis(arr, haar_table(k).T, a)
    return GridFunction.from_aligned(s.grid, arr)


def spectrum_from_dict(grid: Grid, entries: dict) -> HaarSpectrum:
    """Build a spectrum from ``{key: coefficient}`` where a key is a per-axis tuple."""
    c = np.zeros(grid.shape)
    probe = HaarSpectrum(grid, c)
    for key, value in entries.items():
        if isinstance(key, DyadicRectangle):
            key = key.axes
        if not isinstance(key, tuple):
            key = (key,)
        c[tuple(probe._slot(a, k) for a, k in enumerate(key))] += value
    return HaarSpectrum(grid, c)


def haar_atom(grid: Grid, R: DyadicRectangle, normalized=False) -> GridFunction:
    """``h_R``, or ``|R|^{1/2} h_R`` when ``normalized``."""
    f = inverse_haar(spectrum_from_dict(grid, {R: 1.0}))
    if normalized:
        f = f * float(R.measure) ** 0.5
    return f


# ---------------------------------------------------------------- pairings

def _pairing_vector(I: DyadicInterval, k: int, eps: int) -> np.ndarray:
    """``h_I`` (eps=0) or ``chi_I/|I|`` (eps=1) sampled on the ``2^k`` cells."""
    cells = I.cell_indices(k)
    v = np.zeros(2 ** k)
    if eps:
        v[cells] = 2.0 ** I.level
    else:
        half = len(cells) // 2
        if half == 0:
            raise ResolutionError(f"h_I for {I} needs resolution above {k}")
        v[cells[:half]] = 2.0 ** (I.level / 2)
        v[cells[half:]] = -2.0 ** (I.level / 2)
    return v


def haar_coefficient(f: GridFunction, R: DyadicRectangle, eps=None) -> float:
    """``<f, h_R^eps>`` by direct summation over the cells.

    Per axis ``eps=0`` pairs with ``h_I`` and ``eps=1`` with ``chi_I/|I|``; all
    ones gives the mean ``m_R f``.
    """
    if R.N != f.grid.N:
        raise ValueError("rectangle dimension does not match the grid")
    eps = [0] * R.N if eps is None else list(eps)
    for I, k, e in zip(R.axes, f.grid.levels, eps):
        if I.level > k or (e == 0 and I.level == k):
            raise ResolutionError(f"{R} is finer than the grid resolution {f.grid.levels}")
    arr = f.values
    for a in reversed(range(R.N)):
        arr = np.tensordot(arr, _pairing_vector(R.axes[a], f.grid.levels[a], eps[a]), axes=([a], [0]))
    return float(arr) * f.grid.cell_measure


def partial_transform(f: GridFunction, axes: Sequence[int], modes: Sequence) -> GridFunction | float:
    """Pair ``f`` on ``axes`` with ``h_I`` or ``chi_I/|I|``, leaving a function of the other axes.

    ``modes`` holds one ``(HAAR|MEAN, DyadicInterval)`` pair per selected axis.
    When every axis is consumed the result is a number.
    """
    axes = [int(a) for a in axes]
    if len(set(axes)) != len(axes):
        raise ValueError(f"repeated axis in {axes}")
    if len(modes) != len(axes):
        raise ValueError("one mode per selected axis")
    if any(not 0 <= a < f.grid.N for a in axes):
        raise ValueError(f"axes {axes} out of range for N={f.grid.N}")
    arr = f.values
    for a, (kind, I) in sorted(zip(axes, modes), key=lambda t: -t[0]):
        kind = kind.lower()
        if kind not in (HAAR, MEAN):
            raise ValueError(f"unknown pairing {kind!r}")
        k = f.grid.levels[a]
        if I.level > k:
            raise ResolutionError(f"{I} finer than resolution {k}")
        vec = _pairing_vector(I, k, 1 if kind == MEAN else 0) / 2 ** k
        arr = np.tensordot(arr, vec, axes=([a], [0]))
    rest = [a for a in range(f.grid.N) if a not in axes]
    if not rest:
        return float(arr)
    return GridFunction(f.grid.sub(rest), arr)


def mode_coefficients(arr: np.ndarray, levels: Sequence[int], modes: Sequence[str], batch=0) -> np.ndarray:
    """Pairings with ``h_I`` / ``chi_I/|I|`` for all Haar-level intervals at once.

    ``arr`` is in the grid's own frame, with ``batch`` leading batch axes. The
    result has the pyramid layout with the constant slot zero on every axis.
    """
    for a, (k, mode) in enumerate(zip(levels, modes)):
        arr = apply_axis(arr, pairing_tables(k)[0][mode], a + batch)
    return arr


def mode_synthesis(coeffs: np.ndarray, levels: Sequence[int], modes: Sequence[str], batch=0) -> np.ndarray:
    """``sum_R c_R g_R`` with ``g`` per axis ``h_I`` or ``chi_I/|I|`` (grid frame)."""
    for a, (k, mode) in enumerate(zip(levels, modes)):
        arr_mat = pairing_tables(k)[1][mode].T
        coeffs = apply_axis(coeffs, arr_mat, a + batch)
    return coeffs


# ---------------------------------------------------------------- martingale operators

def martingale(f: GridFunction, j: Sequence[int], mode: str) -> GridFunction:
    """Product martingale operators at generation ``j``.

    ``diff``   -- Delta_j: the pure Haar coefficients of generation exactly ``j``;
    ``expect`` -- E_j: every coefficient of level ``< j`` on all axes, where the
                  constant direction counts as level -1 (the conditional expectation
                  onto generation-``j`` rectangles);
    ``tail``   -- Q_j: pure Haar coefficients of level ``>= j`` on all axes.

    For N >= 2, E_j + Q_j is not the identity: coefficients that are coarse on
    some axes and fine on others belong to neither.
    """
    j = tuple(int(x) for x in j)
    if len(j) != f.grid.N:
        raise ValueError(f"generation {j} has wrong length")
    if any(not 0 <= ja <= ka for ja, ka in zip(j, f.grid.levels)):
        raise ResolutionError(f"generation {j} outside resolution {f.grid.levels}")
    mode = mode.lower()
    lv = level_grids(f.grid.levels)
    keep = np.ones(f.grid.shape, dtype=bool)
    for la, ja in zip(lv, j):
        if mode == "diff":
            keep = keep & (la == ja)
        elif mode == "expect":
            keep = keep & (la < ja)
        elif mode == "tail":
            keep = keep & (la >= ja)
        else:
            raise ValueError(f"unknown martingale mode {mode!r}")
    s = forward_haar(f)
    return inverse_haar(HaarSpectrum(f.grid, np.where(keep, s.coeffs, 0.0)))


# ---------------------------------------------------------------- open-set projections

def contained_mask(levels: Sequence[int], omega_aligned: np.ndarray) -> np.ndarray:
    """Spectrum-shaped mask of the pure Haar rectangles lying inside a cell set.

    ``omega_aligned`` is a boolean cell mask in the grid's own frame.
    """
    levels = tuple(levels)
    out = np.zeros(omega_aligned.shape, dtype=bool)
    N = len(levels)
    for js in np.ndindex(*levels):
        shp = []
        for j, k in zip(js, levels):
            shp += [2 ** j, 2 ** (k - j)]
        blocks = omega_aligned.reshape(shp).all(axis=tuple(range(1, 2 * N, 2)))
        out[tuple(slice(2 ** j, 2 ** (j + 1)) for j in js)] = blocks
    return out


def _aligned_mask(omega: OpenSetApprox) -> np.ndarray:
    g = omega.grid
    m = omega.mask
    if g.is_standard:
        return m
    return np.roll(m, [-s for s in g.shift_cells], axis=tuple(range(g.N)))


def project_open_set(f: GridFunction, omega: OpenSetApprox) -> GridFunction:
    """``P_Omega f``: keep the Haar coefficients of rectangles inside ``omega``."""
    if omega.grid != f.grid:
        raise ValueError("open set lives on a different grid")
    s = forward_haar(f)
    keep = contained_mask(f.grid.levels, _aligned_mask(omega))
    return inverse_haar(HaarSpectrum(f.grid, np.where(keep, s.coeffs, 0.0)))


def partial_project_open_set(f: GridFunction, axes: Sequence[int], omega: OpenSetApprox) -> GridFunction:
    """Project on the ``axes`` variables only: keep ``h_T`` with ``T`` inside ``omega``.

    ``omega`` lives on ``f.grid.sub(axes)``; the remaining variables are untouched.
    """
    axes = list(axes)
    if omega.grid != f.grid.sub(axes):
        raise ValueError("open set must live on the sub-grid of the projected axes")
    keep_sub = contained_mask(omega.grid.levels, _aligned_mask(omega))
    rest = [a for a in range(f.grid.N) if a not in axes]
    keep = np.broadcast_to(
        np.expand_dims(keep_sub, tuple(range(len(axes), f.grid.N))),
        tuple(f.grid.shape[a] for a in axes + rest))
    keep = np.moveaxis(keep, range(f.grid.N), axes + rest)
    s = forward_haar(f)
    return inverse_haar(HaarSpectrum(f.grid, np.where(keep, s.coeffs, 0.0)))


# ---------------------------------------------------------------- square function

def square_function(f: GridFunction) -> tuple[GridFunction, float]:
    """Dyadic square function of the pure Haar part of ``f`` and its L1 norm."""
    s = forward_haar(f)
    sq = np.where(s.pure_mask(), s.coeffs ** 2, 0.0)
    for a, k in enumerate(f.grid.levels):
        sq = apply_axis(sq, pairing_tables(k)[1][MEAN].T, a)
    S = GridFunction.from_aligned(f.grid, np.sqrt(np.maximum(sq, 0.0)))
    return S, S.integral()


def h1_norm(f: GridFunction) -> float:
    return square_function(f)[1]


# ---------------------------------------------------------------- first-axis aggregation

def tilde_aggregate(g: GridFunction, k: int) -> HaarSpectrum:
    """Collapse the first-axis tree of ``g`` at level ``k``.

    Coefficients coarser than ``k`` on axis 0 are kept, those at level ``k``
    are replaced by the root-sum-square over their first-axis subtree
    (themselves included), finer ones are dropped. The constant direction on
    axis 0 counts as coarser than every level.
    """
    k0 = g.grid.levels[0]
    if not 0 <= k <= k0:
        raise ResolutionError(f"aggregation level {k} outside 0..{k0}")
    c = forward_haar(g).coeffs
    lv = axis_levels(k0)
    out = np.where((lv < k).reshape((-1,) + (1,) * (g.grid.N - 1)), c, 0.0)
    if k < k0:
        acc = np.zeros((2 ** k,) + c.shape[1:])
        for level in range(k, k0):
            block = c[2 ** level: 2 ** (level + 1)] ** 2
            acc += block.reshape((2 ** k, 2 ** (level - k)) + c.shape[1:]).sum(axis=1)
        out[2 ** k: 2 ** (k + 1)] = np.sqrt(acc)
    return HaarSpectrum(g.grid, out)


def permute_axes(f: GridFunction, order: Sequence[int]) -> GridFunction:
    """Reorder the variables: axis ``a`` of the result is axis ``order[a]`` of ``f``."""
    order = list(order)
    if sorted(order) != list(range(f.grid.N)):
        raise ValueError(f"{order} is not a permutation of the axes")
    return GridFunction(f.grid.sub(order), np.transpose(f.values, order))
