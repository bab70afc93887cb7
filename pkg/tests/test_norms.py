import math
from fractions import Fraction

import numpy as np
import pytest

from prodbmo import (CapacityError, Grid, GridFunction, OpenSetApprox, bmo_m_norm, bmo_norm,
                     dyadic_log, haar_atom, intersection_norm, lmo_norm, product_bmo_norm,
                     slice_bmo_max, stegenga_functional)
from prodbmo.geometry import DyadicInterval
from prodbmo.norms import open_set_quotient

import oracles


def rand(levels, seed):
    g = Grid(levels)
    return GridFunction(g, np.random.default_rng(seed).normal(size=g.shape))


def h_t(levels=(2, 2)):
    """h_[0,1) in the last variable, constant in the others."""
    g = Grid(levels)
    t = np.where(np.arange(2 ** levels[-1]) < 2 ** (levels[-1] - 1), 1.0, -1.0)
    return GridFunction(g, np.broadcast_to(t, g.shape))


# ---------------------------------------------------------------- little bmo

def test_bmo_constant():
    assert bmo_norm(GridFunction.constant(Grid((2, 2)), 3.0)).value == 0.0


def test_bmo_indicator_and_haar():
    g = Grid((2,))
    rep = bmo_norm(GridFunction(g, [1.0, 1.0, 0.0, 0.0]))
    assert rep.value == pytest.approx(0.5)
    assert rep.witness.axes[0] == DyadicInterval(0, 0)
    rep = bmo_norm(haar_atom(g, g.rectangle([(0, 0)])))
    assert rep.value == pytest.approx(1.0)
    assert rep.witness.axes[0] == DyadicInterval(0, 0)


@pytest.mark.parametrize("levels", [(4,), (2, 3), (2, 1, 2)])
@pytest.mark.parametrize("p", [1, 2])
def test_bmo_matches_oracle(levels, p):
    for seed in range(3):
        f = rand(levels, seed)
        assert bmo_norm(f, exponent=p).value == pytest.approx(oracles.bmo_brute(f.values, levels, p=p), abs=1e-12)


def test_bmo_translates_matches_oracle():
    f = rand((3,), 1)
    best = max(oracles.bmo_brute(f.values, (3,), [s]) for s in range(8))
    assert bmo_norm(f, family="translates").value == pytest.approx(best, abs=1e-12)


def test_slice_examples():
    assert slice_bmo_max(GridFunction.constant(Grid((2, 2)), 1.0), (1, 1)) == 0.0
    assert slice_bmo_max(h_t(), (1, 1)) == pytest.approx(1.0)
    with pytest.raises(ValueError):
        slice_bmo_max(h_t(), (2, 1))


def test_slice_matches_oracle():
    f = rand((2, 2), 4)
    v = f.values
    best = max(max(oracles.bmo_brute(v[i, :], (2,)) for i in range(4)),
               max(oracles.bmo_brute(v[:, i], (2,)) for i in range(4)))
    assert slice_bmo_max(f, (1, 1)) == pytest.approx(best, abs=1e-12)


def test_slice_comparable_to_bmo():
    ratios = []
    for seed in range(20):
        f = rand((2, 2), seed)
        ratios.append(slice_bmo_max(f, (1, 1)) / bmo_norm(f).value)
    assert 0 < min(ratios) and max(ratios) < math.inf


# ---------------------------------------------------------------- product BMO

def test_product_bmo_single_atom():
    g = Grid((2, 2))
    R = g.rectangle([(1, 0), (1, 0)])
    rep = product_bmo_norm(haar_atom(g, R), mode="exact")
    assert rep.value == pytest.approx(2.0)
    assert rep.witness == OpenSetApprox.from_mask(g, R.mask(g))


def test_product_bmo_tie_break():
    g = Grid((2, 2))
    R1, R2 = g.rectangle([(1, 0), (1, 0)]), g.rectangle([(1, 1), (1, 1)])
    f = haar_atom(g, R1) + haar_atom(g, R2)
    value, tied = oracles.product_bmo_brute(f.values, g.levels)
    assert value == pytest.approx(2.0)
    r1 = tuple(sorted(np.flatnonzero(R1.mask(g).ravel()).tolist()))
    r12 = tuple(sorted(np.flatnonzero((R1.mask(g) | R2.mask(g)).ravel()).tolist()))
    assert r1 in tied and r12 in tied
    for mode in ("exact", "heuristic"):
        rep = product_bmo_norm(f, mode=mode)
        assert rep.value == pytest.approx(2.0)
        assert rep.witness.flat == r1 == min(tied)


def test_product_bmo_constant():
    for mode in ("exact", "heuristic"):
        assert product_bmo_norm(GridFunction.constant(Grid((2, 2)), 5.0), mode=mode).value == 0.0


def test_product_bmo_cap():
    with pytest.raises(CapacityError):
        product_bmo_norm(rand((3, 3), 0), mode="exact")
    assert product_bmo_norm(rand((3, 3), 0), mode="auto").method == "heuristic"


@pytest.mark.parametrize("levels,shifts", [((2, 2), None), ((1, 3), None), ((4,), None),
                                           ((2, 2), ["1/4", "1/2"])])
def test_product_bmo_matches_oracle(levels, shifts):
    g = Grid(levels) if shifts is None else Grid(levels).translated(shifts)
    for seed in range(3):
        f = GridFunction(g, np.random.default_rng(seed).normal(size=g.shape))
        value, tied = oracles.product_bmo_brute(f.values, levels, list(g.shift_cells))
        rep = product_bmo_norm(f, mode="exact")
        assert rep.value == pytest.approx(value, abs=1e-12)
        assert rep.witness.flat in tied
        assert open_set_quotient(f, rep.witness) == pytest.approx(value ** 2, abs=1e-12)


def test_heuristic_exact_in_one_variable():
    for seed in range(10):
        f = rand((4,), seed)
        ex = product_bmo_norm(f, mode="exact").value
        assert product_bmo_norm(f, mode="heuristic").value == pytest.approx(ex, abs=1e-12)


# ---------------------------------------------------------------- mean BMO

def test_bmo_m_examples():
    rep = bmo_m_norm(h_t())
    assert rep.value == pytest.approx(1.0)
    assert rep.witness["axes"] == [0]
    assert bmo_m_norm(GridFunction.constant(Grid((2, 2)), 1.0)).value == 0.0
    with pytest.raises(ValueError):
        bmo_m_norm(rand((3,), 0))


def test_bmo_m_matches_oracle():
    f = rand((2, 2), 6)
    v = f.values
    best = 0.0
    for j in range(3):
        for m in range(2 ** j):
            cells = oracles.interval_cells(j, m, 2)
            best = max(best, oracles.product_bmo_brute(v[cells, :].mean(axis=0), (2,))[0],
                       oracles.product_bmo_brute(v[:, cells].mean(axis=1), (2,))[0])
    assert bmo_m_norm(f).value == pytest.approx(best, abs=1e-12)


def test_bmo_m_below_bmo_l2_oscillation():
    # with square-mean oscillation the inequality holds exactly in two variables
    for seed in range(40):
        f = rand((2, 2), seed)
        assert bmo_m_norm(f).value <= bmo_norm(f, exponent=2).value + 1e-12


def test_bmo_m_vs_bmo_l1_constant():
    ratios = [bmo_m_norm(f).value / bmo_norm(f).value for f in (rand((2, 2), s) for s in range(40))]
    # L1 and L2 oscillations are comparable, so the ratio stays bounded
    assert max(ratios) < 2.0


# ---------------------------------------------------------------- LMO

def test_lmo_examples():
    g = Grid((2,))
    h = haar_atom(g, g.rectangle([(0, 0)]))
    assert lmo_norm(h, "tail").value == pytest.approx(1.0)
    rep = lmo_norm(h, "carleson")
    assert rep.value == pytest.approx(4.0)
    assert rep.witness["rectangle"] == g.rectangle([(0, 0)])
    for mode in ("tail", "carleson"):
        assert lmo_norm(GridFunction.constant(g, 2.0), mode).value == 0.0


@pytest.mark.parametrize("levels", [(3,), (2, 2)])
def test_lmo_matches_oracle(levels):
    for seed in range(2):
        f = rand(levels, seed)
        assert lmo_norm(f, "tail", search="exact").value == pytest.approx(
            oracles.lmo_tail_brute(f.values, levels), abs=1e-12)
        assert lmo_norm(f, "carleson", search="exact").value == pytest.approx(
            oracles.lmo_carleson_brute(f.values, levels), abs=1e-11)


# ---------------------------------------------------------------- translated systems

def test_intersection_examples():
    g = Grid((2,))
    h = haar_atom(g, g.rectangle([(0, 0)]))
    rep = intersection_norm(h, "bmo", [Fraction(1, 4)])
    assert rep.value == pytest.approx(1.0)
    f = rand((2, 2), 3)
    assert intersection_norm(f, "bmo").value == pytest.approx(bmo_norm(f).value)
    assert intersection_norm(f, "BMO", mode="exact").value == pytest.approx(product_bmo_norm(f).value)
    assert intersection_norm(GridFunction.constant(g, 1.0), "bmo", ["1/2"]).value == 0.0
    with pytest.raises(ValueError):
        intersection_norm(h, "bmo", [Fraction(1, 8)])


def test_intersection_dominates_each_translate():
    f = rand((2, 2), 8)
    alphas = [("1/4", "0"), ("1/2", "3/4")]
    top = intersection_norm(f, "BMO", alphas, mode="exact").value
    for a in alphas:
        v, _ = oracles.product_bmo_brute(f.values, (2, 2), [int(Fraction(x) * 4) for x in a])
        assert top >= v - 1e-12


# ---------------------------------------------------------------- log-weighted oscillation

def test_stegenga_examples():
    g = Grid((2,))
    assert stegenga_functional(GridFunction.constant(g, 1.0)).value == 0.0
    rep = stegenga_functional(haar_atom(g, g.rectangle([(0, 0)])))
    assert rep.value == pytest.approx(2.0)
    assert rep.witness == DyadicInterval(0, 0)
    with pytest.raises(ValueError):
        stegenga_functional(h_t())


def test_stegenga_grows_on_logs():
    vals = []
    for k in range(2, 7):
        g = Grid((k,))
        vals.append(stegenga_functional(dyadic_log(g.interval(0, k, 0), g)).value)
    assert all(b > a for a, b in zip(vals, vals[1:]))


def test_report_json():
    rep = product_bmo_norm(h_t(), mode="exact")
    d = rep.to_json()
    assert set(d) >= {"norm", "value", "method", "witness", "grid", "resolution"}
    assert d["method"] == "exact" and d["resolution"] == [2, 2]
