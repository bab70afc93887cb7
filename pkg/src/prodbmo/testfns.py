"""Test-function constructors and serialisable recipes for them."""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .geometry import DyadicInterval, DyadicRectangle, Grid
from .haar import GridFunction, HaarSpectrum, haar_atom, inverse_haar, level_grids

LOG_INTERVAL = "LOG_INTERVAL"
LOG_RECTANGLE = "LOG_RECTANGLE"
TENSOR = "TENSOR"
ADDITIVE = "ADDITIVE"
INDICATOR = "INDICATOR"
HAAR_ATOM = "HAAR_ATOM"
RANDOM = "RANDOM"
KINDS = (LOG_INTERVAL, LOG_RECTANGLE, TENSOR, ADDITIVE, INDICATOR, HAAR_ATOM, RANDOM)


def _log_axis(I: DyadicInterval, k: int) -> np.ndarray:
    v = np.zeros(2 ** k)
    for A in I.ancestors():
        v[A.cell_indices(k)] += 1.0
    return v


def dyadic_log(target: DyadicInterval | DyadicRectangle, grid: Grid) -> GridFunction:
    """Sum of the indicators of the strict dyadic ancestors of ``target``.

    On the target itself the value is its level (summed over axes for a
    rectangle); coarser cells see fewer ancestors.
    """
    if isinstance(target, DyadicInterval):
        if grid.N != 1:
            raise ValueError("an interval target needs a one-dimensional grid")
        target = DyadicRectangle((target,))
    if target.N != grid.N:
        raise ValueError("target dimension does not match the grid")
    total = np.zeros(grid.shape)
    for a, (I, k) in enumerate(zip(target.axes, grid.levels)):
        if I.level > k:
            from .errors import ResolutionError
            raise ResolutionError(f"{I} finer than resolution {k}")
        shape = [1] * grid.N
        shape[a] = 2 ** k
        total = total + _log_axis(I, k).reshape(shape)
    return GridFunction(grid, total)


def tensor_product(f: GridFunction, g: GridFunction) -> GridFunction:
    """``(f x g)(s, t) = f(s) g(t)`` on the concatenated grid."""
    grid = Grid(f.grid.levels + g.grid.levels, f.grid.alpha + g.grid.alpha)
    return GridFunction(grid, np.multiply.outer(f.values, g.values))


def additive_lift(components: Sequence[GridFunction], grid: Grid | None = None) -> GridFunction:
    """``f(t_1, .., t_N) = sum_j f_j(t_j)`` from one-variable components."""
    comps = list(components)
    if grid is not None and len(comps) != grid.N:
        raise ValueError(f"{len(comps)} components for an N={grid.N} grid")
    if not comps or any(c.grid.N != 1 for c in comps):
        raise ValueError("components must be non-empty one-variable functions")
    levels = tuple(c.grid.levels[0] for c in comps)
    alpha = tuple(c.grid.alpha[0] for c in comps)
    if grid is not None and grid.levels != levels:
        raise ValueError(f"component resolutions {levels} do not match {grid.levels}")
    out = np.zeros(tuple(2 ** k for k in levels))
    for a, c in enumerate(comps):
        shape = [1] * len(comps)
        shape[a] = -1
        out = out + c.values.reshape(shape)
    return GridFunction(grid if grid is not None else Grid(levels, alpha), out)


# ---------------------------------------------------------------- recipes

@dataclass(frozen=True)
class FunctionRecipe:
    kind: str
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown recipe kind {self.kind!r}")

    # constructors
    @classmethod
    def log_interval(cls, level: int, index: int = 0):
        return cls(LOG_INTERVAL, {"level": level, "index": index})

    @classmethod
    def log_rectangle(cls, pairs):
        return cls(LOG_RECTANGLE, {"rectangle": [list(p) for p in pairs]})

    @classmethod
    def indicator(cls, pairs):
        return cls(INDICATOR, {"rectangle": [list(p) for p in pairs]})

    @classmethod
    def haar_atom(cls, pairs, normalized: bool = True):
        return cls(HAAR_ATOM, {"rectangle": [list(p) for p in pairs], "normalized": normalized})

    @classmethod
    def tensor(cls, first: FunctionRecipe, second: FunctionRecipe, n_first: int):
        return cls(TENSOR, {"first": first.to_json(), "second": second.to_json(), "n_first": n_first})

    @classmethod
    def additive(cls, components: Sequence[FunctionRecipe]):
        return cls(ADDITIVE, {"components": [c.to_json() for c in components]})

    @classmethod
    def random(cls, band=None, pure: bool = True):
        """Uniform[-1, 1] Haar coefficients at levels below ``band`` (default: all levels).

        With ``pure=False`` the coefficients with a constant direction are drawn too.
        """
        return cls(RANDOM, {"band": None if band is None else list(band), "pure": pure})

    def to_json(self) -> dict:
        return {"kind": self.kind, "params": self.params}

    def dumps(self) -> str:
        return json.dumps(self.to_json(), sort_keys=True)

    @classmethod
    def from_json(cls, data) -> FunctionRecipe:
        if isinstance(data, str):
            data = json.loads(data)
        return cls(data["kind"], dict(data.get("params", {})))


def _random_function(grid: Grid, seed: int, band, pure: bool) -> GridFunction:
    rng = np.random.default_rng(seed)
    c = rng.uniform(-1.0, 1.0, grid.shape)
    band = grid.levels if band is None else tuple(band)
    if len(band) == 1 and grid.N > 1:
        band = band * grid.N
    keep = np.ones(grid.shape, dtype=bool)
    for lv, b in zip(level_grids(grid.levels), band):
        keep = keep & (lv < b) & ((lv >= 0) if pure else True)
    return inverse_haar(HaarSpectrum(grid, np.where(keep, c, 0.0)))


def sample(recipe: FunctionRecipe, grid: Grid, seed: int = 0) -> GridFunction:
    """Materialise ``recipe`` on ``grid``; only ``RANDOM`` parts depend on ``seed``."""
    p = recipe.params
    k = recipe.kind
    if k == LOG_INTERVAL:
        return dyadic_log(grid.interval(0, p["level"], p.get("index", 0)), grid)
    if k == LOG_RECTANGLE:
        return dyadic_log(grid.rectangle(p["rectangle"]), grid)
    if k == INDICATOR:
        return GridFunction(grid, grid.rectangle(p["rectangle"]).mask(grid).astype(float))
    if k == HAAR_ATOM:
        return haar_atom(grid, grid.rectangle(p["rectangle"]), normalized=p.get("normalized", True))
    if k == TENSOR:
        n1 = int(p["n_first"])
        if not 0 < n1 < grid.N:
            raise ValueError(f"tensor split {n1} invalid for N={grid.N}")
        first = sample(FunctionRecipe.from_json(p["first"]), grid.sub(range(n1)), seed)
        second = sample(FunctionRecipe.from_json(p["second"]), grid.sub(range(n1, grid.N)), seed + 1)
        return tensor_product(first, second)
    if k == ADDITIVE:
        comps = [FunctionRecipe.from_json(c) for c in p["components"]]
        if len(comps) != grid.N:
            raise ValueError(f"{len(comps)} components for an N={grid.N} grid")
        return additive_lift([sample(c, grid.sub([a]), seed + a) for a, c in enumerate(comps)], grid)
    if k == RANDOM:
        return _random_function(grid, seed, p.get("band"), p.get("pure", True))
    raise AssertionError(k)
