"""Brute-force reference computations, written with plain loops.

Nothing here imports the package; every quantity is rebuilt from the
definitions on explicit cell arrays so the tests compare two independent
implementations.
"""
from __future__ import annotations

import itertools
import math

import numpy as np


def interval_cells(j, m, k, shift=0):
    """Cells of the m-th level-j interval at resolution k, translated by ``shift`` cells."""
    w = 2 ** (k - j)
    n = 2 ** k
    return [(m * w + c + shift) % n for c in range(w)]


def haar_1d(j, m, k, shift=0):
    v = np.zeros(2 ** k)
    cells = interval_cells(j, m, k, shift)
    half = len(cells) // 2
    for c in cells[:half]:
        v[c] = 2 ** (j / 2)
    for c in cells[half:]:
        v[c] = -2 ** (j / 2)
    return v


def mean_1d(j, m, k, shift=0):
    v = np.zeros(2 ** k)
    for c in interval_cells(j, m, k, shift):
        v[c] = 2.0 ** j
    return v


def outer(vecs):
    out = vecs[0]
    for v in vecs[1:]:
        out = np.multiply.outer(out, v)
    return out


def pairing(values, vecs):
    """<f, g> with g the tensor product of ``vecs``, as a cell average."""
    g = outer(vecs)
    return float(np.sum(np.asarray(values) * g) / g.size)


def haar_rectangles(levels):
    """All (j, m) tuples per axis with j below the resolution."""
    per_axis = [[(j, m) for j in range(k) for m in range(2 ** j)] for k in levels]
    return list(itertools.product(*per_axis))


def all_rectangles(levels):
    per_axis = [[(j, m) for j in range(k + 1) for m in range(2 ** j)] for k in levels]
    return list(itertools.product(*per_axis))


def rect_cells(rect, levels, shifts=None):
    shifts = shifts or [0] * len(levels)
    return list(itertools.product(*[interval_cells(j, m, k, s) for (j, m), k, s in zip(rect, levels, shifts)]))


def haar_coefficients(values, levels, shifts=None):
    shifts = shifts or [0] * len(levels)
    return {R: pairing(values, [haar_1d(j, m, k, s) for (j, m), k, s in zip(R, levels, shifts)])
            for R in haar_rectangles(levels)}


def bmo_brute(values, levels, shifts=None, p=1):
    """max over dyadic rectangles of the mean |f - m_R f|^p, to the power 1/p."""
    values = np.asarray(values)
    best = 0.0
    for R in all_rectangles(levels):
        xs = [values[c] for c in rect_cells(R, levels, shifts)]
        mu = sum(xs) / len(xs)
        osc = (sum(abs(x - mu) ** p for x in xs) / len(xs)) ** (1 / p)
        best = max(best, osc)
    return best


def product_bmo_brute(values, levels, shifts=None):
    """sqrt of the max over every cell union of |Omega|^-1 sum_{R in Omega} f_R^2.

    Returns ``(value, maximisers)`` where maximisers are sorted tuples of
    row-major standard cell numbers that reach the maximum (within 1e-12).
    """
    values = np.asarray(values)
    shape = values.shape
    coeffs = haar_coefficients(values, levels, shifts)
    rect_sets = {R: {np.ravel_multi_index(c, shape) for c in rect_cells(R, levels, shifts)} for R in coeffs}
    n = values.size
    cell_measure = 1.0 / n
    scores = {}
    for r in range(1, n + 1):
        for omega in itertools.combinations(range(n), r):
            s = set(omega)
            total = sum(coeffs[R] ** 2 for R, cells in rect_sets.items() if cells <= s)
            scores[omega] = total / (r * cell_measure)
    best = max(scores.values())
    tied = sorted(o for o, v in scores.items() if v >= best - 1e-12 * max(1.0, best))
    return math.sqrt(best), tied


def apply_B_brute(phi, f, sig, levels):
    eps, delta, beta = sig
    out = np.zeros(np.asarray(f).shape)
    pick = lambda e, j, m, k: mean_1d(j, m, k) if e else haar_1d(j, m, k)
    for R in haar_rectangles(levels):
        a = pairing(phi, [pick(e, j, m, k) for e, (j, m), k in zip(eps, R, levels)])
        b = pairing(f, [pick(d, j, m, k) for d, (j, m), k in zip(delta, R, levels)])
        if a * b:
            out = out + a * b * outer([pick(bb, j, m, k) for bb, (j, m), k in zip(beta, R, levels)])
    return out


def carleson_brute(coeffs, levels, within=None):
    """max over cell unions Omega (inside ``within`` if given) of |Omega|^-1 sum_{R in Omega} c_R^2."""
    shape = tuple(2 ** k for k in levels)
    n = int(np.prod(shape))
    pool = sorted(within) if within is not None else list(range(n))
    rect_sets = {R: {int(np.ravel_multi_index(c, shape)) for c in rect_cells(R, levels)} for R in coeffs}
    best = 0.0
    for r in range(1, len(pool) + 1):
        for omega in itertools.combinations(pool, r):
            s = set(omega)
            total = sum(c ** 2 for R, c in coeffs.items() if rect_sets[R] <= s)
            best = max(best, total * n / r)
    return best


def lmo_tail_brute(values, levels):
    coeffs = haar_coefficients(values, levels)
    best = 0.0
    for js in itertools.product(*[range(k) for k in levels]):
        sub = {R: c for R, c in coeffs.items() if all(j >= ja for (j, _), ja in zip(R, js))}
        best = max(best, (sum(js) + len(levels)) * math.sqrt(carleson_brute(sub, levels)))
    return best


def lmo_carleson_brute(values, levels):
    shape = tuple(2 ** k for k in levels)
    coeffs = haar_coefficients(values, levels)
    best = 0.0
    for R in coeffs:
        cells = {int(np.ravel_multi_index(c, shape)) for c in rect_cells(R, levels)}
        w = sum(j + 2 for j, _ in R) ** 2
        best = max(best, w * carleson_brute(coeffs, levels, cells))
    return best
