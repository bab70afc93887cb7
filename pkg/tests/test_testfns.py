import numpy as np
import pytest

from prodbmo import (FunctionRecipe, Grid, GridFunction, additive_lift, bmo_norm, dyadic_log,
                     haar_atom, sample, tensor_product)
from prodbmo.geometry import DyadicInterval

import oracles


def test_log_values():
    g = Grid((3,))
    f = dyadic_log(DyadicInterval(3, 0), g)
    # every strict ancestor of [0,1/8) contributes its indicator
    assert f.values.tolist() == [3, 3, 2, 2, 1, 1, 1, 1]
    assert dyadic_log(DyadicInterval(0, 0), g).values.tolist() == [0] * 8


def test_log_matches_ancestor_count():
    k = 5
    I = DyadicInterval(4, 6)
    ref = np.zeros(2 ** k)
    for j in range(I.level):
        ref[oracles.interval_cells(j, I.index >> (I.level - j), k)] += 1
    assert np.array_equal(dyadic_log(I, Grid((k,))).values, ref)


def test_tensor_constant():
    g = GridFunction(Grid((2,)), [1.0, 2.0, 3.0, 4.0])
    one = GridFunction.constant(Grid((1,)), 1.0)
    t = tensor_product(one, g)
    assert t.grid.levels == (1, 2)
    assert np.array_equal(t.values, np.vstack([g.values, g.values]))


def test_additive_examples():
    z = GridFunction.zeros(Grid((2,)))
    assert np.all(additive_lift([z, z]).values == 0)
    h = haar_atom(Grid((2,)), Grid((2,)).rectangle([(0, 0)]))
    assert bmo_norm(additive_lift([h, h])).value == pytest.approx(1.0)
    assert bmo_norm(additive_lift([h, h])).value <= 2.0
    log = dyadic_log(DyadicInterval(2, 0), Grid((2,)))
    f = additive_lift([log, z])
    for i in range(4):
        assert np.array_equal(f.values[:, i], log.values)
        assert np.all(f.values[i, :] == f.values[i, 0])
    with pytest.raises(ValueError):
        additive_lift([z, z], Grid((2, 2, 2)))


def test_recipes():
    g = Grid((2, 2))
    assert np.array_equal(sample(FunctionRecipe.indicator([(1, 0), (1, 1)]), g).values,
                          g.rectangle([(1, 0), (1, 1)]).mask(g).astype(float))
    a = sample(FunctionRecipe.haar_atom([(1, 0), (0, 0)]), g)
    assert a.sup_norm() == pytest.approx(1.0)
    r1 = sample(FunctionRecipe.random(), g, seed=7)
    r2 = sample(FunctionRecipe.random(), g, seed=7)
    assert np.array_equal(r1.values, r2.values)
    assert not np.array_equal(r1.values, sample(FunctionRecipe.random(), g, seed=8).values)


def test_recipe_json_round_trip():
    r = FunctionRecipe.tensor(FunctionRecipe.log_interval(2), FunctionRecipe.random(), 1)
    back = FunctionRecipe.from_json(r.dumps())
    g = Grid((2, 3))
    assert np.array_equal(sample(r, g, 3).values, sample(back, g, 3).values)
