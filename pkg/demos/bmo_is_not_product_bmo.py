"""
Little bmo and product BMO on tensor logarithms
===============================================

The dyadic logarithm of [0, 2^-k) has bounded oscillation on every interval.
Its tensor square keeps bounded product BMO norm but its rectangle
oscillation grows linearly in k.
"""

from prodbmo import Grid, bmo_norm, dyadic_log, product_bmo_norm, tensor_product

print(f"{'k':>2} {'bmo(F)':>8} {'bmo/k':>7} {'BMO(F)':>8} {'BMO(f)^2':>9}")
for k in range(2, 6):
    g = Grid((k,))
    f = dyadic_log(g.interval(0, k, 0), g)
    F = tensor_product(f, f)
    # one variable: the greedy search is exact
    one = product_bmo_norm(f, mode="heuristic").value
    big = product_bmo_norm(F, mode="heuristic").value
    little = bmo_norm(F).value
    print(f"{k:>2} {little:8.3f} {little / k:7.3f} {big:8.3f} {one ** 2:9.3f}")

# the right-hand column bounds the product BMO norm of the tensor from above
