"""
Haar analysis of step functions on the torus
============================================

A grid function is a step function on 2^k1 x ... x 2^kN cells. Its spectrum
uses, on every axis, one constant slot plus one Haar function per dyadic
interval coarser than the cells.
"""

import numpy as np

from prodbmo import Grid, GridFunction, forward_haar, inverse_haar, square_function

# a random function on a 4 x 8 grid
grid = Grid((2, 3))
f = GridFunction(grid, np.random.default_rng(0).normal(size=grid.shape))

# analysis and synthesis are exact up to rounding
spec = forward_haar(f)
print("round trip error:", np.abs(inverse_haar(spec).values - f.values).max())
print("Parseval gap:    ", abs(spec.sum_of_squares() - f.l2_norm() ** 2))

# the coefficient at a rectangle is the pairing with its Haar function
R = grid.rectangle([(1, 0), (2, 3)])
print("coefficient at", R, "=", spec[R])

# the square function sums |f_R|^2 / |R| over the rectangles covering a point
S, h1 = square_function(f)
print("dyadic H1 norm:", h1)
