"""Norm functionals: little bmo, product BMO over open sets, mean BMO, LMO, log-weighted oscillation.

Every functional is computed at the working resolution of the input's grid.
Product-BMO type quantities are suprema over unions of finest cells; with
``mode="exact"`` all unions are enumerated (up to the cell cap), with
``mode="heuristic"`` a certified lower bound is returned, and ``"auto"``
picks exact whenever the grid is small enough.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Iterable, Sequence

import numpy as np

from .geometry import DyadicInterval, DyadicRectangle, Grid, OpenSetApprox, as_fraction, exact_cap
from .haar import GridFunction, apply_axis, forward_haar, haar_table, level_grids
from .search import TIE_RTOL, engine

EXACT = "exact"
HEURISTIC = "heuristic"
AUTO = "auto"


@dataclass
class NormReport:
    norm: str
    value: float
    witness: Any
    method: str
    grid: Grid
    extra: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        out = {"norm": self.norm, "value": float(self.value), "method": self.method,
               "witness": witness_json(self.witness), "grid": self.grid.to_dict(),
               "resolution": list(self.grid.levels)}
        if self.extra:
            out["extra"] = witness_json(self.extra)
        return out


def witness_json(w):
    if isinstance(w, DyadicRectangle):
        return {"rectangle": [[I.level, I.index, str(I.shift)] for I in w.axes]}
    if isinstance(w, DyadicInterval):
        return {"interval": [w.level, w.index, str(w.shift)]}
    if isinstance(w, OpenSetApprox):
        return {"open_set": w.to_json()}
    if isinstance(w, NormReport):
        return w.to_json()
    if isinstance(w, dict):
        return {str(k): witness_json(v) for k, v in w.items()}
    if isinstance(w, (list, tuple)):
        return [witness_json(v) for v in w]
    if isinstance(w, Fraction):
        return str(w)
    if isinstance(w, (np.integer,)):
        return int(w)
    if isinstance(w, (np.floating,)):
        return float(w)
    return w


def _resolve_mode(mode: str, ncells: int, cap: int | None) -> str:
    mode = mode.lower()
    if mode == AUTO:
        return EXACT if ncells <= exact_cap(cap) else HEURISTIC
    if mode not in (EXACT, HEURISTIC):
        raise ValueError(f"unknown search mode {mode!r}")
    return mode


def _tied(value, best):
    return value >= best - TIE_RTOL * max(1.0, abs(best))


def _better(value, best):
    return best is None or value > best + TIE_RTOL * max(1.0, abs(best))


# ---------------------------------------------------------------- frames

def _standard_flat(grid: Grid, aligned_flat: np.ndarray) -> np.ndarray:
    idx = np.unravel_index(np.asarray(aligned_flat, dtype=int), grid.shape)
    idx = [(i + s) % n for i, s, n in zip(idx, grid.shift_cells, grid.shape)]
    return np.ravel_multi_index(idx, grid.shape)


def _key_for(grid: Grid):
    return lambda cells: tuple(sorted(_standard_flat(grid, cells).tolist()))


def _cell_order(grid: Grid) -> np.ndarray:
    """Aligned cell numbers sorted by their torus (standard) numbering."""
    aligned = np.arange(grid.ncells)
    return aligned[np.argsort(_standard_flat(grid, aligned), kind="stable")]


def _open_set(grid: Grid, aligned_cells) -> OpenSetApprox:
    return OpenSetApprox.from_flat(grid, _standard_flat(grid, aligned_cells).tolist())


def _aligned_universe(grid: Grid, mask: np.ndarray) -> np.ndarray:
    if grid.is_standard:
        return mask.ravel()
    return np.roll(mask, [-s for s in grid.shift_cells], axis=tuple(range(grid.N))).ravel()


# ---------------------------------------------------------------- product BMO engine glue

def carleson_sup(grid: Grid, weights: np.ndarray, mode=AUTO, cap=None, universe=None):
    """``sup_Omega |Omega|^-1 sum_{R in Omega} w_R`` for one or many weight rows.

    Returns ``(values, witnesses, method)`` with witnesses as aligned cell arrays.
    """
    eng = engine(grid.levels)
    W = np.atleast_2d(weights)
    method = _resolve_mode(mode, grid.ncells, cap)
    key = _key_for(grid)
    values, cells = [], []
    if method == EXACT:
        omegas, scores = eng.exact_scores(W, exact_cap(cap))
        allowed = None
        if universe is not None:
            ubits = sum(1 << int(c) for c in np.flatnonzero(universe))
            allowed = (omegas & ~np.int64(ubits)) == 0
        for b in range(W.shape[0]):
            v, c = eng.pick(omegas, scores[:, b], key, allowed)
            values.append(v)
            cells.append(c)
    else:
        order = _cell_order(grid)
        for b in range(W.shape[0]):
            v, c = eng.heuristic(W[b], key, order, universe)
            values.append(v)
            cells.append(c)
    return np.array(values), cells, method


def _bmo_from_coeffs(grid: Grid, coeffs: np.ndarray, mode, cap, name="BMO") -> NormReport:
    eng = engine(grid.levels)
    vals, cells, method = carleson_sup(grid, eng.weights(coeffs), mode, cap)
    return NormReport(name, float(np.sqrt(max(vals[0], 0.0))), _open_set(grid, cells[0]), method, grid)


def product_bmo_norm(f: GridFunction, mode: str = AUTO, cap: int | None = None) -> NormReport:
    """Dyadic product BMO: ``value^2 = sup_Omega |Omega|^-1 sum_{R in Omega} f_R^2``.

    Only pure Haar coefficients enter; means along any variable are invisible.
    """
    return _bmo_from_coeffs(f.grid, forward_haar(f).coeffs, mode, cap)


def open_set_quotient(f: GridFunction, omega: OpenSetApprox) -> float:
    """``|Omega|^-1 ||P_Omega f||_2^2`` for a single open set."""
    from .haar import _aligned_mask, contained_mask
    c = forward_haar(f).coeffs
    keep = contained_mask(f.grid.levels, _aligned_mask(omega))
    return float(np.sum(c[keep] ** 2) / omega.measure)


# ---------------------------------------------------------------- little bmo

def _oscillations(arr: np.ndarray, levels: Sequence[int], batch: int = 0, p: int = 1):
    """Yield ``(js, osc)`` with the mean Lp oscillation on every generation-``js`` rectangle."""
    N = len(levels)
    bshape = arr.shape[:batch]
    for js in itertools.product(*[range(k + 1) for k in levels]):
        shp = list(bshape)
        for j, k in zip(js, levels):
            shp += [2 ** j, 2 ** (k - j)]
        blocks = arr.reshape(shp)
        inner = tuple(batch + 2 * a + 1 for a in range(N))
        means = blocks.mean(axis=inner, keepdims=True)
        dev = np.abs(blocks - means)
        if p == 1:
            yield js, dev.mean(axis=inner)
        else:
            yield js, (dev ** p).mean(axis=inner) ** (1.0 / p)


def _bmo_max(arr: np.ndarray, grid: Grid, weight=None, p: int = 1):
    """Max of ``weight(js) * oscillation`` and the smallest maximising rectangle."""
    best, cands = None, []
    for js, osc in _oscillations(arr, grid.levels, p=p):
        if weight is not None:
            osc = osc * weight(js)
        m = float(osc.max())
        if _better(m, best):
            best, cands = m, []
        if _tied(m, best):
            for idx in zip(*np.nonzero(osc >= best - TIE_RTOL * max(1.0, abs(best)))):
                cands.append(grid.rectangle([(j, int(i)) for j, i in zip(js, idx)]))
    return best, min(cands)


def _bmo_batch(arr: np.ndarray, levels, batch: int = 1) -> np.ndarray:
    out = np.zeros(arr.shape[:batch])
    for _, osc in _oscillations(arr, levels, batch):
        out = np.maximum(out, osc.reshape(osc.shape[:batch] + (-1,)).max(axis=-1))
    return out


def _bmo_on_grid(f: GridFunction, p: int = 1) -> tuple[float, DyadicRectangle]:
    return _bmo_max(f.aligned(), f.grid, p=p)


def all_translations(grid: Grid):
    return [tuple(Fraction(s, 2 ** k) for s, k in zip(shift, grid.levels))
            for shift in itertools.product(*[range(n) for n in grid.shape])]


def bmo_norm(f: GridFunction, family: str = "dyadic", alphas: Iterable | None = None,
             exponent: int = 1) -> NormReport:
    """Little bmo: the largest mean L1 oscillation over dyadic rectangles.

    ``exponent=2`` measures the oscillation in L2 instead (an equivalent norm).

    ``family="dyadic"`` uses the grid's own dyadic system. ``"translates"`` takes
    the maximum over translated dyadic systems: the given ``alphas``, or every
    translation by whole cells when none are given.
    """
    family = family.lower()
    if family == "dyadic":
        v, R = _bmo_on_grid(f, exponent)
        return NormReport("bmo", v, R, EXACT, f.grid)
    if family not in ("translates", "all_translates"):
        raise ValueError(f"unknown rectangle family {family!r}")
    alphas = all_translations(f.grid) if alphas is None else [_alpha_tuple(a, f.grid.N) for a in alphas]
    best, wit = None, None
    for a in alphas:
        v, R = _bmo_on_grid(f.on_grid(f.grid.translated(a)), exponent)
        if _better(v, best):
            best, wit = v, R
    return NormReport("bmo", best, wit, EXACT, f.grid)


def slice_bmo_max(f: GridFunction, split: Sequence[int]) -> float:
    """Largest bmo norm of the slices obtained by freezing either group of variables.

    With ``split=(N1, N2)`` the first ``N1`` axes form one group and the last
    ``N2`` the other. Every finest cell of the frozen group gives one slice.
    """
    n1, n2 = (int(x) for x in split)
    N = f.grid.N
    if n1 <= 0 or n2 <= 0 or n1 + n2 != N:
        raise ValueError(f"split {tuple(split)} must be two positive parts of N={N}")
    arr = f.aligned()
    lv = f.grid.levels
    first, last = list(range(n1)), list(range(n1, N))
    out = 0.0
    for keep, frozen in ((first, last), (last, first)):
        moved = np.moveaxis(arr, frozen, list(range(len(frozen))))
        moved = moved.reshape((-1,) + tuple(arr.shape[a] for a in keep))
        out = max(out, float(_bmo_batch(moved, [lv[a] for a in keep]).max()))
    return out


# ---------------------------------------------------------------- mean BMO

def _axis_haar(arr: np.ndarray, levels, batch=1):
    for a, k in enumerate(levels):
        arr = apply_axis(arr, haar_table(k) / 2 ** k, a + batch)
    return arr


def partial_means(f: GridFunction, axes: Sequence[int]):
    """All averages ``m_R f`` over dyadic ``R`` in the ``axes`` variables.

    Returns ``(rects, arr)`` where ``arr[i]`` is the aligned array of
    ``m_{rects[i]} f`` on the remaining variables.
    """
    axes = list(axes)
    rest = [a for a in range(f.grid.N) if a not in axes]
    arr = np.moveaxis(f.aligned(), axes, list(range(len(axes))))
    sub = f.grid.sub(axes)
    rects, out = [], []
    lv = sub.levels
    for js in itertools.product(*[range(k + 1) for k in lv]):
        shp = []
        for j, k in zip(js, lv):
            shp += [2 ** j, 2 ** (k - j)]
        blocks = arr.reshape(shp + list(arr.shape[len(axes):]))
        means = blocks.mean(axis=tuple(2 * a + 1 for a in range(len(axes))))
        for idx in itertools.product(*[range(2 ** j) for j in js]):
            rects.append(sub.rectangle(list(zip(js, idx))))
            out.append(means[idx])
    return rects, np.array(out).reshape((len(rects),) + tuple(f.grid.shape[a] for a in rest))


def bmo_m_norm(f: GridFunction, mode: str = AUTO, cap: int | None = None) -> NormReport:
    """Mean dyadic product BMO: the largest product BMO norm of a partial average.

    Averages are taken over dyadic rectangles in every proper nonempty subset of
    the variables, and the product BMO norm is evaluated in the rest.
    """
    N = f.grid.N
    if N < 2:
        raise ValueError("mean BMO needs N >= 2")
    best, wit, methods = None, None, set()
    for n1 in range(1, N):
        for axes in itertools.combinations(range(N), n1):
            rest = [a for a in range(N) if a not in axes]
            sub = f.grid.sub(rest)
            rects, arr = partial_means(f, axes)
            W = engine(sub.levels).weights(_axis_haar(arr, sub.levels), batch=True)
            vals, cells, method = carleson_sup(sub, W, mode, cap)
            methods.add(method)
            i = int(np.argmax(vals))
            if _better(float(vals[i]), best):
                best = float(vals[i])
                wit = {"axes": list(axes), "rectangle": rects[i], "open_set": _open_set(sub, cells[i])}
    method = HEURISTIC if HEURISTIC in methods else EXACT
    return NormReport("BMO_m", float(np.sqrt(max(best, 0.0))), wit, method, f.grid)


# ---------------------------------------------------------------- LMO

def _lmo_tail(f: GridFunction, mode, cap) -> NormReport:
    grid = f.grid
    c = forward_haar(f).coeffs
    lv = level_grids(grid.levels)
    gens = list(itertools.product(*[range(k) for k in grid.levels]))
    if not gens:
        return NormReport("LMO_tail", 0.0, None, EXACT, grid)
    rows = []
    for js in gens:
        keep = np.ones(grid.shape, dtype=bool)
        for la, ja in zip(lv, js):
            keep = keep & (la >= ja)
        rows.append(np.where(keep, c, 0.0))
    eng = engine(grid.levels)
    W = eng.weights(np.array(rows), batch=True)
    vals, cells, method = carleson_sup(grid, W, mode, cap)
    scaled = [(sum(js) + grid.N) * np.sqrt(max(v, 0.0)) for js, v in zip(gens, vals)]
    i = int(np.argmax(scaled))
    wit = {"generation": list(gens[i]), "open_set": _open_set(grid, cells[i])}
    return NormReport("LMO_tail", float(scaled[i]), wit, method, grid)


def _lmo_carleson(f: GridFunction, mode, cap) -> NormReport:
    grid = f.grid
    eng = engine(grid.levels)
    w = eng.weights(forward_haar(f).coeffs)
    method = _resolve_mode(mode, grid.ncells, cap)
    key = _key_for(grid)
    best, wit = 0.0, None
    if len(eng.haar_flat) == 0:
        return NormReport("LMO_carleson", 0.0, None, method, grid)
    if method == EXACT:
        omegas, scores = eng.exact_scores(w[None, :], exact_cap(cap))
        scores = scores[:, 0]
    order = _cell_order(grid)
    for r in range(len(eng.haar_flat)):
        js = eng.haar_levels[r]
        factor = float(sum(j + 2 for j in js)) ** 2
        cells_R = eng.A.indices[eng.A.indptr[r]:eng.A.indptr[r + 1]]
        if method == EXACT:
            rbits = np.int64(sum(1 << int(x) for x in cells_R))
            v, cells = eng.pick(omegas, scores, key, (omegas & ~rbits) == 0)
        else:
            universe = np.zeros(grid.ncells, dtype=bool)
            universe[cells_R] = True
            v, cells = eng.heuristic(w, key, order, universe)
        v *= factor
        if v > best + TIE_RTOL * max(1.0, best) or wit is None:
            slots = np.unravel_index(eng.haar_flat[r], grid.shape)
            R = grid.rectangle([(int(p).bit_length() - 1, int(p) - 2 ** (int(p).bit_length() - 1))
                                for p in slots])
            best, wit = max(v, best), {"rectangle": R, "open_set": _open_set(grid, cells)}
    return NormReport("LMO_carleson", float(best), wit, method, grid)


def lmo_norm(f: GridFunction, mode: str = "tail", search: str = AUTO, cap: int | None = None) -> NormReport:
    """Dyadic logarithmic mean oscillation.

    ``tail``: ``sup_j ((j_1+...+j_N) + N) ||Q_j f||_BMO``.
    ``carleson``: ``sup_{R, Omega in R} (sum_a log2(4/|I_a|))^2 |Omega|^-1 sum_{Q in Omega} f_Q^2``.
    The carleson value is on the squared scale of the tail value.
    """
    mode = mode.lower()
    if mode == "tail":
        return _lmo_tail(f, search, cap)
    if mode == "carleson":
        return _lmo_carleson(f, search, cap)
    raise ValueError(f"unknown LMO mode {mode!r}")


# ---------------------------------------------------------------- translated grids

def _alpha_tuple(a, N) -> tuple:
    if isinstance(a, (list, tuple)):
        if len(a) != N:
            raise ValueError(f"translation {a} needs {N} entries")
        return tuple(as_fraction(x) for x in a)
    return (as_fraction(a),) * N if N == 1 else tuple(as_fraction(a) for _ in range(N))


def intersection_norm(f: GridFunction, which: str, alphas: Iterable = (), **kwargs) -> NormReport:
    """Largest value of a dyadic norm over translated dyadic systems.

    ``which`` is ``"bmo"``, ``"BMO"`` or ``"LMO"``. The untranslated system is
    always included. Each translation must be a multiple of the cell width.
    """
    N = f.grid.N
    zero = (Fraction(0),) * N
    sample = [zero] + [_alpha_tuple(a, N) for a in alphas]
    for a in sample:
        for x, k in zip(a, f.grid.levels):
            if (as_fraction(x) * 2 ** k).denominator != 1:
                raise ValueError(f"translation {a} is not aligned with the cell width")
    funcs = {"bmo": lambda g: bmo_norm(g),
             "BMO": lambda g: product_bmo_norm(g, **kwargs),
             "LMO": lambda g: lmo_norm(g, **kwargs)}
    if which not in funcs:
        raise ValueError(f"unknown norm {which!r}; expected one of {sorted(funcs)}")
    best, wit, methods, seen = None, None, set(), set()
    for a in sample:
        a = tuple(as_fraction(x) % 1 for x in a)
        if a in seen:
            continue
        seen.add(a)
        rep = funcs[which](f.on_grid(f.grid.translated(a)))
        methods.add(rep.method)
        if _better(rep.value, best):
            best, wit = rep.value, {"alpha": list(a), "witness": rep.witness}
    method = HEURISTIC if HEURISTIC in methods else EXACT
    return NormReport(f"intersection_{which}", float(best), wit, method, f.grid)


# ---------------------------------------------------------------- one-parameter multiplier functional

def stegenga_functional(f: GridFunction) -> NormReport:
    """``sup_I log2(4/|I|) |I|^-1 int_I |f - m_I f|`` over dyadic intervals (N = 1)."""
    if f.grid.N != 1:
        raise ValueError("the log-weighted oscillation functional is one-dimensional")
    v, R = _bmo_max(f.aligned(), f.grid, weight=lambda js: js[0] + 2)
    return NormReport("stegenga", v, R.axes[0], EXACT, f.grid)
