"""
The discrete Laplacian on a curvilinear grid
============================================

Assemble the integration weights and the weak-form Laplacian on a smoothly
perturbed periodic grid and look at the structure that survives the
discretization: Q-symmetry, constants in the null space, negative
semidefiniteness, and a stencil of at most (4 n_span - 1)^2 points.
"""

import numpy as np

from sympres.checks import operator_checks
from sympres.grid import make_grid
from sympres.operators import (
    adjoint_sample,
    assemble_laplacian,
    assemble_weights,
    continuous_inner,
    interpolate,
)
from sympres.spline import preset

spline = preset("medium")
grid = make_grid("sinusoidal", (20, 20), amplitude=0.05)
weights = assemble_weights(grid, spline)
A = assemble_laplacian(grid, spline, weights)

print(grid)
print(f"sum of Q: {weights.total:.15f}, min Q * N^2: {weights.Q.min() * 400:.4f}")
print(f"stencil sizes: {sorted({int(k) for k in A.nonzeros_per_row()})}")

# interpolation J and sampling S are adjoint in the Q inner product
rng = np.random.default_rng(0)
g = rng.standard_normal(grid.n_points)


def f(x):
    return np.cos(2 * np.pi * x[..., 0]) * np.sin(4 * np.pi * x[..., 1])


lhs = weights.inner(adjoint_sample(f, grid, spline, weights), g)
rhs = continuous_inner(f, g, grid, spline)
print(f"<S f, g>_Q = {lhs:.15f}\n int f Jg  = {rhs:.15f}")

# a smooth field: A behaves like the Laplacian
p = np.sin(2 * np.pi * grid.points[:, 0])
print(f"A sin(2 pi x) / sin(2 pi x) ~ -4 pi^2 = {-4 * np.pi**2:.3f}:",
      f"{np.median((A @ p)[np.abs(p) > 0.5] / p[np.abs(p) > 0.5]):.3f}")

# interpolation of the constant is exact everywhere
xi = rng.uniform(0, 20, size=(5, 2))
print("J 1 at random points:", interpolate(np.ones(grid.n_points), grid, spline, xi))

for result in operator_checks(grid, spline, seed=0):
    print(result)
