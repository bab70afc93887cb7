"""
The product as a sum of 3^N bilinear pieces
===========================================

Each piece pairs phi and f with Haar functions or normalised indicators per
axis. For mean-zero inputs the pieces add up to the pointwise product. Each
piece is a matrix in the Haar basis whose L2 norm is estimated by power
iteration.
"""

import numpy as np

from prodbmo import (FunctionRecipe, Grid, OperatorHandle, assemble_matrix, decompose_product,
                     l2_operator_norm, product_bmo_norm, sample)

grid = Grid((3, 3))
phi = sample(FunctionRecipe.random(), grid, seed=1)
f = sample(FunctionRecipe.random(), grid, seed=2)

parts = decompose_product(phi, f)
total = sum(p.values for p in parts.values())
print(len(parts), "pieces, residual", np.abs(total - phi.values * f.values).max())

# operator norm of each piece relative to the product BMO norm of the symbol
B = product_bmo_norm(phi).value
for sig in parts:
    norm = l2_operator_norm(assemble_matrix(OperatorHandle(str(sig), phi, sig)))
    print(f"{sig}  |B| = {norm:.3f}   |B| / BMO(phi) = {norm / B:.3f}")
