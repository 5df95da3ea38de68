r"""
Periodic structured curvilinear grids.

A grid is the image of the integer lattice of *array space* under a smooth
mapping :math:`\xi \mapsto x(\xi)`. The mapping is periodic in the sense that
:math:`x(\xi + N_k e_k) = x(\xi) + L_k e_k`, so every grid has
:math:`N_1 \cdots N_d` distinct points.

Integrals over the physical domain are computed cell by cell in array space:
every unit cell :math:`[c, c + 1)^d` gets a tensor Gauss-Legendre rule and the
weights are scaled by :math:`\det J`. The rule is exact on affine meshes
for polynomial integrands up to degree ``2 * points - 1``.

.. autoclass:: Mapping
.. autoclass:: UniformMapping
.. autoclass:: SinusoidalMapping
.. autoclass:: AnalyticMapping
.. autoclass:: QuadratureRule
.. autoclass:: CurvilinearGrid
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Callable, Sequence, Tuple, Union

import numpy as np

from sympres.errors import DegenerateMapping

# Gauss points per direction and cell. With degree-11 splines the stiffness
# integrand has degree 20 on affine meshes, which needs at least 11 points.
DEFAULT_QUAD_POINTS = 12

# {{{ mappings


class Mapping:
    """Smooth periodic map from array space to physical space.

    Subclasses implement :meth:`__call__` and :meth:`jacobian` for points of
    shape ``(..., dim)``.

    .. attribute:: shape

        Number of grid points along each array-space axis.

    .. attribute:: period

        Physical displacement after one full period along each axis.
    """

    shape: Tuple[int, ...]
    period: Tuple[float, ...]
    kind: str = "user"

    @property
    def dim(self) -> int:
        return len(self.shape)

    @property
    def volume(self) -> float:
        return float(np.prod(self.period))

    def __call__(self, xi: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def jacobian(self, xi: np.ndarray) -> np.ndarray:
        """Analytic derivative :math:`\\partial x_k / \\partial \\xi_l`, shape ``(..., dim, dim)``."""
        raise NotImplementedError


def _as_shape(shape: Union[int, Sequence[int]]) -> Tuple[int, ...]:
    if isinstance(shape, (int, np.integer)):
        shape = (int(shape),)
    shape = tuple(int(n) for n in shape)
    if len(shape) not in (1, 2):
        raise ValueError(f"only 1D and 2D grids are supported: {shape}")
    if any(n < 1 for n in shape):
        raise ValueError(f"grid sizes must be positive: {shape}")
    return shape


@dataclass(frozen=True)
class UniformMapping(Mapping):
    """Affine map of array space onto ``[0, L_1) x ... x [0, L_d)``."""

    shape: Tuple[int, ...]
    period: Tuple[float, ...] = None
    kind: str = field(default="uniform", init=False)

    def __post_init__(self) -> None:
        shape = _as_shape(self.shape)
        object.__setattr__(self, "shape", shape)
        if self.period is None:
            object.__setattr__(self, "period", (1.0,) * len(shape))

    @property
    def _h(self) -> np.ndarray:
        return np.array(self.period) / np.array(self.shape)

    def __call__(self, xi):
        return np.asarray(xi, dtype=np.float64) * self._h

    def jacobian(self, xi):
        xi = np.asarray(xi, dtype=np.float64)
        return np.broadcast_to(np.diag(self._h), (*xi.shape[:-1], self.dim, self.dim)).copy()


@dataclass(frozen=True)
class SinusoidalMapping(Mapping):
    r"""Smoothly perturbed unit square (or unit interval).

    In 2D, with :math:`s = \sin(2\pi\xi/N_1)\sin(2\pi\eta/N_2)`,

    .. math::

        x = \xi / N_1 + a s, \qquad y = \eta / N_2 + a s,

    and in 1D :math:`x = \xi / N + a \sin(2 \pi \xi / N)`.
    """

    shape: Tuple[int, ...]
    amplitude: float = 0.05
    period: Tuple[float, ...] = field(default=None, init=False)
    kind: str = field(default="sinusoidal", init=False)

    def __post_init__(self) -> None:
        shape = _as_shape(self.shape)
        object.__setattr__(self, "shape", shape)
        object.__setattr__(self, "period", (1.0,) * len(shape))

    def __call__(self, xi):
        xi = np.asarray(xi, dtype=np.float64)
        n = np.array(self.shape, dtype=np.float64)
        phase = 2.0 * np.pi * xi / n
        s = np.prod(np.sin(phase), axis=-1, keepdims=True)
        return xi / n + self.amplitude * s

    def jacobian(self, xi):
        xi = np.asarray(xi, dtype=np.float64)
        n = np.array(self.shape, dtype=np.float64)
        phase = 2.0 * np.pi * xi / n
        sin, cos = np.sin(phase), np.cos(phase)

        # ds/dxi_l = (2 pi / N_l) cos(phase_l) prod_{m != l} sin(phase_m)
        ds = np.empty_like(xi)
        for l in range(self.dim):
            others = np.prod(np.delete(sin, l, axis=-1), axis=-1)
            ds[..., l] = 2.0 * np.pi / n[l] * cos[..., l] * others

        jac = self.amplitude * np.repeat(ds[..., None, :], self.dim, axis=-2)
        jac += np.diag(1.0 / n)
        return jac


@dataclass(frozen=True)
class AnalyticMapping(Mapping):
    """User-supplied mapping with an analytic Jacobian.

    Both callables take arrays of shape ``(..., dim)``; *func* returns
    ``(..., dim)`` and *jac* returns ``(..., dim, dim)``.
    """

    func: Callable[[np.ndarray], np.ndarray]
    jac: Callable[[np.ndarray], np.ndarray]
    shape: Tuple[int, ...]
    period: Tuple[float, ...] = None
    kind: str = field(default="analytic", init=False)

    def __post_init__(self) -> None:
        shape = _as_shape(self.shape)
        object.__setattr__(self, "shape", shape)
        if self.period is None:
            object.__setattr__(self, "period", (1.0,) * len(shape))

    def __call__(self, xi):
        return np.asarray(self.func(np.asarray(xi, dtype=np.float64)))

    def jacobian(self, xi):
        return np.asarray(self.jac(np.asarray(xi, dtype=np.float64)))


def make_mapping(
    kind: str, shape: Union[int, Sequence[int]], amplitude: float = 0.05
) -> Mapping:
    """Construct a built-in mapping by name (``"uniform"`` or ``"sinusoidal"``)."""
    if kind == "uniform":
        return UniformMapping(shape)
    if kind in ("sinusoidal", "curvilinear"):
        return SinusoidalMapping(shape, amplitude=amplitude)
    raise ValueError(f"unknown mapping kind: '{kind}'")


# }}}


# {{{ quadrature


@dataclass(frozen=True)
class QuadratureRule:
    """Gauss-Legendre rule on ``[0, 1]`` with *points* nodes."""

    points: int = DEFAULT_QUAD_POINTS

    def __post_init__(self) -> None:
        if self.points < 1:
            raise ValueError(f"points must be positive: {self.points}")

    @cached_property
    def nodes_and_weights(self) -> Tuple[np.ndarray, np.ndarray]:
        x, w = np.polynomial.legendre.leggauss(self.points)
        return 0.5 * (x + 1.0), 0.5 * w

    @property
    def nodes(self) -> np.ndarray:
        return self.nodes_and_weights[0]

    @property
    def weights(self) -> np.ndarray:
        return self.nodes_and_weights[1]

    def tensor(self, dim: int) -> Tuple[np.ndarray, np.ndarray]:
        """Tensor-product nodes ``(G, dim)`` and weights ``(G,)`` on ``[0, 1]^dim``.

        The last axis varies fastest.
        """
        grids = np.meshgrid(*([self.nodes] * dim), indexing="ij")
        nodes = np.stack([g.ravel() for g in grids], axis=-1)
        wgrids = np.meshgrid(*([self.weights] * dim), indexing="ij")
        weights = np.prod(np.stack([g.ravel() for g in wgrids], axis=-1), axis=-1)
        return nodes, weights


# }}}


# {{{ grid


class CurvilinearGrid:
    """Periodic structured grid defined by a :class:`Mapping`.

    Grid points and cells are numbered in C order over the array-space
    multi-index. Cell ``c`` is the unit cube ``[c, c + 1)`` in array space.

    :raises DegenerateMapping: if :math:`\\det J \\le 0` at any quadrature
        node.
    """

    def __init__(self, mapping: Mapping, quadrature: QuadratureRule | None = None):
        self.mapping = mapping
        self.quadrature = QuadratureRule() if quadrature is None else quadrature

        # forces the Jacobian check at construction
        _ = self.cell_arrays

    def __repr__(self) -> str:
        return (
            f"{type(self).__name__}({self.mapping.kind}, shape={self.shape}, "
            f"quadrature={self.quadrature.points})"
        )

    @property
    def shape(self) -> Tuple[int, ...]:
        return self.mapping.shape

    @property
    def dim(self) -> int:
        return self.mapping.dim

    @property
    def n_points(self) -> int:
        return int(np.prod(self.shape))

    @property
    def volume(self) -> float:
        return self.mapping.volume

    # {{{ pointwise queries

    def lattice(self) -> np.ndarray:
        """Integer array-space coordinates of every grid point, ``(n_points, dim)``."""
        idx = np.meshgrid(*[np.arange(n) for n in self.shape], indexing="ij")
        return np.stack([i.ravel() for i in idx], axis=-1)

    @cached_property
    def points(self) -> np.ndarray:
        """Physical coordinates of every grid point, ``(n_points, dim)``."""
        return self.physical_point(self.lattice().astype(np.float64))

    def physical_point(self, xi) -> np.ndarray:
        """Map array-space coordinates of shape ``(..., dim)`` to physical space."""
        xi = np.asarray(xi, dtype=np.float64)
        if self.dim == 1 and xi.ndim == 0:
            xi = xi[None]
        return self.mapping(xi)

    def jacobian(self, xi) -> np.ndarray:
        """Jacobian :math:`\\partial x / \\partial \\xi` at *xi*, ``(..., dim, dim)``.

        :raises DegenerateMapping: if the determinant is not positive.
        """
        xi = np.asarray(xi, dtype=np.float64)
        if self.dim == 1 and xi.ndim == 0:
            xi = xi[None]
        jac = self.mapping.jacobian(xi)
        det = np.linalg.det(jac)
        if np.any(det <= 0.0):
            raise DegenerateMapping(
                f"nonpositive Jacobian determinant (min {np.min(det):.3e})"
            )
        return jac

    def array_point(self, x, *, tol: float = 1.0e-13, maxiter: int = 50) -> np.ndarray:
        """Invert the mapping by Newton's method.

        Uses the uniform-grid position as the starting guess, which is
        adequate for the mildly perturbed mappings used here.
        """
        x = np.asarray(x, dtype=np.float64)
        shape = np.array(self.shape, dtype=np.float64)
        period = np.array(self.mapping.period)

        xi = x / period * shape
        for _ in range(maxiter):
            r = self.physical_point(xi) - x
            if np.max(np.abs(r / period), initial=0.0) < tol:
                break
            jac = self.jacobian(xi)
            xi = xi - np.linalg.solve(jac, r[..., None])[..., 0]

        return xi

    # }}}

    # {{{ quadrature

    def cell_index(self, cell: Union[int, Sequence[int]]) -> Tuple[int, ...]:
        """Multi-index of *cell*, given either as a multi-index or a flat C-order index."""
        if np.ndim(cell) == 0:
            if not 0 <= cell < self.n_points:
                raise IndexError(f"cell {cell} outside grid of shape {self.shape}")
            return tuple(int(c) for c in np.unravel_index(int(cell), self.shape))

        cell = tuple(cell)
        if len(cell) != self.dim or any(
            not 0 <= c < n for c, n in zip(cell, self.shape)
        ):
            raise IndexError(f"cell {cell} outside grid of shape {self.shape}")
        return tuple(int(c) for c in cell)

    def cell_quadrature(
        self, cell: Union[int, Sequence[int]]
    ) -> Tuple[np.ndarray, np.ndarray]:
        """Array-space nodes ``(G, dim)`` and physical weights ``(G,)`` in *cell*."""
        cell = self.cell_index(cell)
        nodes, weights = self.quadrature.tensor(self.dim)
        xi = nodes + np.array(cell, dtype=np.float64)
        det = np.linalg.det(self.jacobian(xi))
        return xi, weights * det

    @cached_property
    def cell_arrays(self) -> "CellArrays":
        """Quadrature data for all cells at once, see :class:`CellArrays`."""
        return CellArrays.from_grid(self)

    def dump_points(self, path: Union[str, Path]) -> None:
        """Write grid points as CSV: ``i,x`` in 1D and ``i,j,x,y`` in 2D."""
        lattice = self.lattice()
        points = self.points
        if self.dim == 1:
            header = "i,x"
        else:
            header = "i,j,x,y"

        lines = [header]
        for idx, x in zip(lattice, points):
            lines.append(
                ",".join([str(int(i)) for i in idx] + [repr(float(v)) for v in x])
            )
        Path(path).write_text("\n".join(lines) + "\n")

    # }}}


@dataclass(frozen=True)
class CellArrays:
    """Quadrature nodes and geometry on every cell.

    .. attribute:: cells

        Integer cell multi-indices, ``(C, dim)``.

    .. attribute:: local_nodes

        Reference nodes in ``[0, 1]^dim``, ``(G, dim)``.

    .. attribute:: xi

        Array-space nodes, ``(C, G, dim)``.

    .. attribute:: weights

        Physical weights (Gauss weight times :math:`\\det J`), ``(C, G)``.

    .. attribute:: inverse_jacobian

        :math:`J^{-1}` at every node, ``(C, G, dim, dim)``.
    """

    cells: np.ndarray
    local_nodes: np.ndarray
    reference_weights: np.ndarray
    xi: np.ndarray
    weights: np.ndarray
    inverse_jacobian: np.ndarray

    @classmethod
    def from_grid(cls, grid: CurvilinearGrid) -> "CellArrays":
        cells = grid.lattice()
        nodes, ref = grid.quadrature.tensor(grid.dim)
        xi = cells[:, None, :] + nodes[None, :, :]

        jac = grid.jacobian(xi)
        det = np.linalg.det(jac)

        return cls(
            cells=cells,
            local_nodes=nodes,
            reference_weights=ref,
            xi=xi,
            weights=ref[None, :] * det,
            inverse_jacobian=np.linalg.inv(jac),
        )


def make_grid(
    kind: str,
    shape: Union[int, Sequence[int]],
    *,
    amplitude: float = 0.05,
    quad_points: int = DEFAULT_QUAD_POINTS,
) -> CurvilinearGrid:
    """Shortcut for a grid on a built-in mapping."""
    return CurvilinearGrid(
        make_mapping(kind, shape, amplitude=amplitude), QuadratureRule(quad_points)
    )


# }}}
