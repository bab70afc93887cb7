"""
Why logarithms are not pointwise multipliers
============================================

Multiply the indicator of a shrinking dyadic interval by a fixed dyadic
logarithm. The indicator has small bmo norm, but the product BMO norm of the
product grows with the depth of the interval.
"""

from prodbmo import Grid, GridFunction, bmo_norm, dyadic_log, product_bmo_norm, stegenga_functional

K = 7
g = Grid((K,))
phi = dyadic_log(g.interval(0, K, 0), g)

for j in range(2, 7):
    chi = GridFunction(g, g.rectangle([(j, 0)]).mask(g).astype(float))
    ratio = product_bmo_norm(phi * chi).value / bmo_norm(chi).value
    print(f"R' = [0, 2^-{j}):  BMO(phi chi) / bmo(chi) = {ratio:.3f}")

# the one-variable multiplier functional sees the same growth
for k in range(2, 7):
    gk = Grid((k,))
    value = stegenga_functional(dyadic_log(gk.interval(0, k, 0), gk)).value
    print(f"k = {k}:  log-weighted oscillation = {value:.3f}")
