"""Invariant checks for an assembled discretization."""

from __future__ import annotations

from dataclasses import dataclass
from typing import List, Optional

import numpy as np

from sympres.grid import CurvilinearGrid
from sympres.operators import (
    adjoint_sample,
    assemble_laplacian,
    assemble_weights,
    check_adjointness,
    continuous_inner,
    interpolate,
    ritz_values,
    row_sum_defect,
    symmetry_defect,
)
from sympres.spline import InterpolationSpline


@dataclass(frozen=True)
class CheckResult:
    name: str
    value: float
    tolerance: float

    @property
    def passed(self) -> bool:
        return bool(np.isfinite(self.value) and self.value <= self.tolerance)

    def __str__(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"{status} {self.name}: {self.value:.3e} (tol {self.tolerance:.1e})"


def random_trig_field(dim: int, rng: np.random.Generator, max_mode: int = 3):
    """A random trigonometric polynomial on the periodic unit cube."""
    modes = rng.integers(-max_mode, max_mode + 1, size=(4, dim))
    amps = rng.standard_normal(4)
    phases = rng.uniform(0.0, 2.0 * np.pi, size=4)

    def f(x):
        x = np.asarray(x)
        arg = 2.0 * np.pi * np.tensordot(x, modes.T, axes=([-1], [0]))
        return np.sum(amps * np.cos(arg + phases), axis=-1)

    return f


def operator_checks(
    grid: CurvilinearGrid,
    spline: InterpolationSpline,
    *,
    seed: int = 0,
    n_points: int = 1000,
    n_ritz: int = 50,
    rng: Optional[np.random.Generator] = None,
) -> List[CheckResult]:
    """Run the symmetry, null-space, definiteness and consistency checks."""
    if rng is None:
        rng = np.random.default_rng(seed)

    weights = assemble_weights(grid, spline)
    op = assemble_laplacian(grid, spline, weights)

    results = [
        CheckResult("QA symmetry (entrywise, relative)", symmetry_defect(op), 1.0e-12),
        CheckResult(
            "Q-adjointness on random vectors",
            check_adjointness(op, weights, 20, rng=rng),
            1.0e-12,
        ),
        CheckResult("row sums A 1 (relative)", row_sum_defect(op), 1.0e-10),
        CheckResult(
            "largest Ritz value of QA", float(np.max(ritz_values(op, n_ritz, rng=rng))), 1.0e-12
        ),
        CheckResult("sum Q - |V|", abs(weights.total - grid.volume), 1.0e-10),
    ]

    xi = rng.uniform(0.0, 1.0, size=(n_points, grid.dim)) * np.array(grid.shape)
    ones = np.ones(grid.n_points)
    pou = np.max(np.abs(interpolate(ones, grid, spline, xi) - 1.0))
    results.append(CheckResult("partition of unity", float(pou), 1.0e-10))

    # <S f, g>_Q against the continuous pairing of f with J g
    worst = 0.0
    for _ in range(5):
        f = random_trig_field(grid.dim, rng)
        g = rng.standard_normal(grid.n_points)
        lhs = weights.inner(adjoint_sample(f, grid, spline, weights), g)
        rhs = continuous_inner(f, g, grid, spline)
        worst = max(worst, abs(lhs - rhs))
    results.append(CheckResult("mutual adjointness of S and J", worst, 1.0e-8))

    bound = (4 * spline.n_span - 1) ** grid.dim
    results.append(
        CheckResult(
            f"nonzeros per row - {bound}",
            float(max(0, op.nonzeros_per_row().max() - bound)),
            0.0,
        )
    )
    return results
