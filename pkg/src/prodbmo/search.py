"""Maximisation of Carleson quotients over unions of finest cells.

For nonnegative weights ``w_R`` on the pure Haar rectangles of a grid, the
engine computes ``sup_Omega (1/|Omega|) sum_{R inside Omega} w_R`` either by
enumerating every cell union or by a seeded greedy search. All work happens in
the grid's own frame (cell numbers are row-major indices of the aligned array);
callers translate witnesses back to torus coordinates.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
import scipy.sparse as sp

from .errors import CapacityError

TIE_RTOL = 1e-12


@dataclass
class SearchResult:
    value: float          # the supremum of the quotient (squared-norm scale)
    cells: np.ndarray     # aligned flat cell numbers of the maximiser
    method: str


def _block_cells(shape, js, idx, levels) -> np.ndarray:
    ranges = []
    for j, m, k in zip(js, idx, levels):
        w = 2 ** (k - j)
        ranges.append(np.arange(m * w, (m + 1) * w))
    grids = np.meshgrid(*ranges, indexing="ij")
    return np.ravel_multi_index([g.ravel() for g in grids], shape)


class CarlesonSearch:
    """Precomputed incidence data for one resolution vector."""

    def __init__(self, levels):
        self.levels = tuple(levels)
        self.shape = tuple(2 ** k for k in self.levels)
        self.ncells = int(np.prod(self.shape))
        self.cell_measure = 2.0 ** -sum(self.levels)
        N = len(self.levels)

        haar_flat, rows, cols = [], [], []
        for js in itertools.product(*[range(k) for k in self.levels]):
            for idx in itertools.product(*[range(2 ** j) for j in js]):
                r = len(haar_flat)
                haar_flat.append(np.ravel_multi_index(
                    [2 ** j + m for j, m in zip(js, idx)], self.shape))
                cells = _block_cells(self.shape, js, idx, self.levels)
                rows.append(np.full(len(cells), r))
                cols.append(cells)
        self.haar_flat = np.array(haar_flat, dtype=int)
        nh = len(haar_flat)
        if nh:
            rows, cols = np.concatenate(rows), np.concatenate(cols)
        else:
            rows = cols = np.zeros(0, dtype=int)
        self.A = sp.csr_matrix((np.ones(len(rows)), (rows, cols)), shape=(nh, self.ncells))
        self.AT = self.A.T.tocsr()
        self.sizes = np.asarray(self.A.sum(axis=1)).ravel()
        self.haar_levels = np.array(
            [[int(p).bit_length() - 1 for p in np.unravel_index(f, self.shape)] for f in haar_flat],
            dtype=int).reshape(nh, N)

        # seeds: every dyadic rectangle (levels 0..k), in rectangle order
        seeds, seed_keys = [], []
        per_axis = [[(j, m) for j in range(k + 1) for m in range(2 ** j)] for k in self.levels]
        srow, scol = [], []
        for combo in itertools.product(*per_axis):
            js = [c[0] for c in combo]
            idx = [c[1] for c in combo]
            seeds.append(_block_cells(self.shape, js, idx, self.levels))
            seed_keys.append(combo)
        self.seeds = seeds
        self.seed_keys = seed_keys
        # Haar rectangles inside each seed
        member = np.zeros(self.ncells, dtype=bool)
        for s, cells in enumerate(seeds):
            member[:] = False
            member[cells] = True
            inside = np.flatnonzero(np.asarray(self.A @ member.astype(float)).ravel() == self.sizes) if nh else []
            srow.append(np.full(len(inside), s))
            scol.append(np.asarray(inside, dtype=int))
        srow = np.concatenate(srow) if srow else np.zeros(0, dtype=int)
        scol = np.concatenate(scol) if scol else np.zeros(0, dtype=int)
        self.seed_contains = sp.csr_matrix((np.ones(len(srow)), (srow, scol)), shape=(len(seeds), nh))
        self.seed_sizes = np.array([len(c) for c in seeds])
        self._exact = None

    # ------------------------------------------------------------ weights

    def weights(self, coeffs: np.ndarray, batch=False) -> np.ndarray:
        """Squared pure-Haar coefficients, shape ``(nh,)`` or ``(B, nh)``."""
        if batch:
            flat = coeffs.reshape(coeffs.shape[0], -1)
            return flat[:, self.haar_flat] ** 2
        return coeffs.ravel()[self.haar_flat] ** 2

    # ------------------------------------------------------------ exact

    def exact_tables(self, cap: int):
        if self.ncells > cap:
            raise CapacityError(
                f"{self.ncells} cells exceed the exact enumeration cap of {cap}; "
                "use mode='heuristic'")
        if self._exact is None:
            n = self.ncells
            omegas = np.arange(1, 2 ** n, dtype=np.int64)
            rect_bits = np.zeros(len(self.haar_flat), dtype=np.int64)
            for r in range(len(self.haar_flat)):
                for c in self.A.indices[self.A.indptr[r]:self.A.indptr[r + 1]]:
                    rect_bits[r] |= np.int64(1) << np.int64(c)
            contained = (omegas[:, None] & rect_bits[None, :]) == rect_bits[None, :]
            popcount = np.zeros(len(omegas), dtype=np.int64)
            for c in range(n):
                popcount += (omegas >> c) & 1
            self._exact = (omegas, rect_bits, contained.astype(float), popcount)
        return self._exact

    def exact_scores(self, W: np.ndarray, cap: int) -> tuple[np.ndarray, np.ndarray]:
        """Quotients of every cell union for each weight row; returns ``(omegas, scores)``."""
        omegas, _, contained, popcount = self.exact_tables(cap)
        W = np.atleast_2d(W)
        scores = (contained @ W.T) / (popcount[:, None] * self.cell_measure)
        return omegas, scores

    @staticmethod
    def bits_to_cells(bits: int) -> np.ndarray:
        return np.array([i for i in range(int(bits).bit_length()) if bits >> i & 1], dtype=int)

    def pick(self, omegas, scores, key, allowed=None) -> tuple[float, np.ndarray]:
        """Best score over the allowed rows, ties resolved by the smallest ``key(cells)``."""
        if allowed is not None:
            scores = np.where(allowed, scores, -np.inf)
        best = float(scores.max())
        if not np.isfinite(best):
            raise ValueError("no admissible open set")
        tol = TIE_RTOL * max(1.0, abs(best))
        tied = np.flatnonzero(scores >= best - tol)
        if len(tied) > 256:
            # only happens for flat (typically all-zero) weights; single cells lead the order
            singles = [t for t in tied if int(omegas[t]) & (int(omegas[t]) - 1) == 0]
            if singles:
                tied = singles
        cells = min((self.bits_to_cells(int(omegas[t])) for t in tied), key=key)
        return best, cells

    # ------------------------------------------------------------ heuristic

    def _score(self, w, inset: np.ndarray) -> float:
        n = inset.sum()
        if n == 0:
            return 0.0
        full = np.asarray(self.A @ inset.astype(float)).ravel() == self.sizes
        return float(w[full].sum()) / (n * self.cell_measure)

    def _greedy(self, w, inset: np.ndarray, universe: np.ndarray, order: np.ndarray):
        """Add single cells while that strictly raises the quotient."""
        inset = inset.copy()
        n = int(inset.sum())
        missing = self.sizes - np.asarray(self.A @ inset.astype(float)).ravel()
        total = float(w[missing == 0].sum())
        cur = total / (n * self.cell_measure)
        blocked = ~universe | inset
        while True:
            gains = np.asarray(self.AT @ np.where(missing == 1, w, 0.0)).ravel()
            new = (total + gains) / ((n + 1) * self.cell_measure)
            new[blocked] = -np.inf
            cand = new[order]
            i = int(np.argmax(cand))
            if not np.isfinite(cand[i]) or cand[i] <= cur * (1 + TIE_RTOL) or cand[i] <= cur:
                break
            c = int(order[i])
            inset[c] = True
            blocked[c] = True
            total += float(gains[c])
            n += 1
            cur = total / (n * self.cell_measure)
            missing[self.AT.indices[self.AT.indptr[c]:self.AT.indptr[c + 1]]] -= 1
        return cur, inset

    def heuristic(self, w, key, order, universe=None, top=8) -> tuple[float, np.ndarray]:
        """Certified lower bound: best of rectangles, greedy growth and rectangle unions.

        ``order`` lists cell numbers in tie-break priority; ``key`` ranks
        equally good witnesses.
        """
        if universe is None:
            universe = np.ones(self.ncells, dtype=bool)
        ok = [s for s, cells in enumerate(self.seeds) if universe[cells].all()]
        if not ok:
            raise ValueError("universe contains no dyadic rectangle")
        seed_scores = (self.seed_contains[ok] @ w) / (self.seed_sizes[ok] * self.cell_measure)

        best = [-np.inf, None]

        def offer(score, inset):
            tol = TIE_RTOL * max(1.0, abs(best[0])) if np.isfinite(best[0]) else 0.0
            cells = np.flatnonzero(inset)
            if score > best[0] + tol:
                best[0], best[1] = score, cells
            elif score >= best[0] - tol and key(cells) < key(best[1]):
                best[0], best[1] = max(score, best[0]), cells

        def mask_of(cells):
            m = np.zeros(self.ncells, dtype=bool)
            m[cells] = True
            return m

        for s, score in zip(ok, seed_scores):
            offer(float(score), mask_of(self.seeds[s]))
        if not np.any(w > 0):
            return max(best[0], 0.0), best[1]
        for s in ok:
            score, inset = self._greedy(w, mask_of(self.seeds[s]), universe, order)
            offer(score, inset)
        ranked = [ok[i] for i in np.argsort(-seed_scores, kind="stable") if seed_scores[i] > 0][:top]
        unions = []
        for r in range(2, len(ranked) + 1):
            unions.append(ranked[:r])
        unions += [list(p) for p in itertools.combinations(ranked, 2)]
        for group in unions:
            inset = np.zeros(self.ncells, dtype=bool)
            for s in group:
                inset[self.seeds[s]] = True
            offer(self._score(w, inset), inset)
            offer(*self._greedy(w, inset, universe, order))
        return best[0], best[1]


@lru_cache(maxsize=32)
def engine(levels: tuple[int, ...]) -> CarlesonSearch:
    return CarlesonSearch(levels)
