r"""
Mutually adjoint interpolation and sampling, and the discrete Laplacian.

The interpolation and sampling operators are

.. math::

    (J g)(x) = \sum_i g_i w_i(x), \qquad
    (S f)_i = \frac{1}{Q_i} \int_V f w_i \,\mathrm{d}V, \qquad
    Q_i = \int_V w_i \,\mathrm{d}V,

with tensor-product basis functions :math:`w_i(x(\xi)) = \prod_k w_0(\xi_k -
i_k)`. With the discrete inner product :math:`\langle x, y \rangle_Q =
\sum_i x_i Q_i y_i` the two are mutually adjoint, :math:`S = J^*`.

The Laplacian :math:`A = S \nabla^2 J` is assembled in weak form,

.. math::

    A_{ij} = -\frac{1}{Q_i} \int_V \nabla w_i \cdot \nabla w_j \,\mathrm{d}V,

which equals the strong form on periodic domains and makes :math:`Q A`
symmetric and negative semidefinite for any quadrature.

.. autoclass:: IntegrationWeights
.. autoclass:: BasisFunctions
.. autoclass:: DiscreteOperator

.. autofunction:: assemble_weights
.. autofunction:: interpolate
.. autofunction:: adjoint_sample
.. autofunction:: point_sample
.. autofunction:: assemble_laplacian
.. autofunction:: check_adjointness
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from pathlib import Path
from typing import Callable, Optional, Sequence, Tuple, Union

import numpy as np
import scipy.sparse as sp

from sympres.errors import NonPositiveWeight
from sympres.grid import CurvilinearGrid
from sympres.spline import InterpolationSpline

# keeps per-chunk temporaries of the stiffness assembly around 32 MB
_CHUNK_ENTRIES = 4_000_000


# {{{ weights


@dataclass(frozen=True)
class IntegrationWeights:
    """Diagonal of the integration matrix, :math:`Q_i = \\int_V w_i \\,\\mathrm{d}V`."""

    Q: np.ndarray

    def __post_init__(self) -> None:
        Q = np.array(self.Q, dtype=np.float64)
        Q.setflags(write=False)
        object.__setattr__(self, "Q", Q)

    def __len__(self) -> int:
        return self.Q.size

    @property
    def total(self) -> float:
        return float(np.sum(self.Q))

    def inner(self, x: np.ndarray, y: np.ndarray) -> float:
        """Discrete inner product :math:`\\sum_i x_i Q_i y_i`."""
        return float(np.sum(x * self.Q * y))

    def norm(self, x: np.ndarray) -> float:
        return float(np.sqrt(self.inner(x, x)))


# }}}


# {{{ local basis tables


def _tensor_table(factors: Sequence[np.ndarray]) -> np.ndarray:
    """Combine per-axis tables ``(A, n)`` into ``(n**d, A**d)``.

    Node and basis multi-indices are flattened in C order, matching
    :meth:`QuadratureRule.tensor` and the local basis numbering.
    """
    d = len(factors)
    basis = "abc"[:d]
    nodes = "ghi"[:d]
    spec = ",".join(f"{b}{n}" for b, n in zip(basis, nodes))
    table = np.einsum(f"{spec}->{nodes}{basis}", *factors)
    n_nodes = int(np.prod([f.shape[1] for f in factors]))
    return table.reshape(n_nodes, -1)


class LocalBasis:
    """Basis function values on the quadrature nodes of every cell.

    Cell ``c`` overlaps the basis functions ``i = c - o`` for offsets
    ``o = -n_span, ..., n_span - 1`` per axis; on that cell
    :math:`w_i(\\xi) = \\prod_k w_0(o_k + t_k)` with ``t = xi - c``.
    """

    def __init__(self, grid: CurvilinearGrid, spline: InterpolationSpline):
        self.grid = grid
        self.spline = spline

        dim = grid.dim
        t = grid.quadrature.nodes
        W = spline.interval_values(t)
        D = spline.interval_values(t, derivative=1)

        self.values = _tensor_table([W] * dim)
        self.gradients = [
            _tensor_table([D if k == l else W for l in range(dim)])
            for k in range(dim)
        ]

        offsets = spline.offsets
        local = np.stack(
            np.meshgrid(*([offsets] * dim), indexing="ij"), axis=-1
        ).reshape(-1, dim)
        self.local_offsets = local

    @property
    def n_local(self) -> int:
        return self.local_offsets.shape[0]

    @cached_property
    def dofs(self) -> np.ndarray:
        """Global basis index for every ``(cell, local basis)`` pair, ``(C, L)``."""
        cells = self.grid.cell_arrays.cells
        idx = cells[:, None, :] - self.local_offsets[None, :, :]
        shape = np.array(self.grid.shape)
        idx = np.mod(idx, shape)
        return np.ravel_multi_index(
            tuple(idx[..., k] for k in range(self.grid.dim)), self.grid.shape
        )

    def gather(self, values: np.ndarray) -> np.ndarray:
        """Interpolate grid *values* onto all quadrature nodes, ``(C, G)``."""
        return np.asarray(values)[self.dofs] @ self.values.T

    def scatter(self, nodal: np.ndarray) -> np.ndarray:
        """Transpose of :meth:`gather`: ``sum_g nodal[c, g] w_i(xi_{c, g})``."""
        local = nodal @ self.values
        return np.bincount(
            self.dofs.ravel(), weights=local.ravel(), minlength=self.grid.n_points
        )


_BASIS_CACHE: dict = {}


def local_basis(grid: CurvilinearGrid, spline: InterpolationSpline) -> LocalBasis:
    key = (id(grid), id(spline))
    basis = _BASIS_CACHE.get(key)
    if basis is None or basis.grid is not grid or basis.spline is not spline:
        basis = LocalBasis(grid, spline)
        _BASIS_CACHE.clear()
        _BASIS_CACHE[key] = basis
    return basis


# }}}


# {{{ weights and pointwise basis functions


def assemble_weights(
    grid: CurvilinearGrid, spline: InterpolationSpline
) -> IntegrationWeights:
    """Integrate every basis function over the domain.

    :raises NonPositiveWeight: if any :math:`Q_i \\le 0`.
    """
    basis = local_basis(grid, spline)
    Q = basis.scatter(grid.cell_arrays.weights)

    if np.any(Q <= 0.0):
        i = int(np.argmin(Q))
        raise NonPositiveWeight(f"integration weight Q[{i}] = {Q[i]:.3e} <= 0")

    return IntegrationWeights(Q)


def _axis_values(
    spline: InterpolationSpline, xi: np.ndarray, n: int, derivative: int = 0
) -> Tuple[np.ndarray, np.ndarray]:
    """Values and global indices of the basis functions overlapping *xi*.

    :returns: ``(values, index)``, both of shape ``(P, 2 * n_span)``.
    """
    base = np.floor(xi)
    t = xi - base
    values = spline.interval_values(t, derivative=derivative).T
    index = np.mod(base[:, None].astype(np.intp) - spline.offsets[None, :], n)
    return values, index


def interpolate(
    values: np.ndarray,
    grid: CurvilinearGrid,
    spline: InterpolationSpline,
    xi: Optional[np.ndarray] = None,
    *,
    x: Optional[np.ndarray] = None,
    derivative: Optional[Sequence[int]] = None,
) -> np.ndarray:
    """Evaluate :math:`(J g)` at array-space points *xi* or physical points *x*.

    :arg values: grid values, flat or of shape ``grid.shape``.
    :arg derivative: optional array-space derivative order per axis, e.g.
        ``(1, 0)`` for :math:`\\partial / \\partial \\xi`.
    :returns: one value per point, ``(P,)``.
    """
    if (xi is None) == (x is None):
        raise ValueError("exactly one of 'xi' and 'x' must be given")
    if xi is None:
        xi = grid.array_point(np.asarray(x, dtype=np.float64))

    xi = np.asarray(xi, dtype=np.float64)
    if grid.dim == 1 and xi.ndim <= 1:
        xi = xi.reshape(-1, 1)
    xi = xi.reshape(-1, grid.dim)

    if derivative is None:
        derivative = (0,) * grid.dim
    g = np.asarray(values).reshape(grid.shape)

    axes = [
        _axis_values(spline, xi[:, k], grid.shape[k], derivative[k])
        for k in range(grid.dim)
    ]

    if grid.dim == 1:
        (v, i), = axes
        return np.sum(v * g[i], axis=1)

    (v1, i1), (v2, i2) = axes
    local = g[i1[:, :, None], i2[:, None, :]]
    return np.einsum("pab,pa,pb->p", local, v1, v2)


class BasisFunctions:
    """Pointwise access to :math:`w_i` and :math:`s_i = w_i / Q_i`."""

    def __init__(
        self,
        grid: CurvilinearGrid,
        spline: InterpolationSpline,
        weights: IntegrationWeights,
    ):
        self.grid = grid
        self.spline = spline
        self.weights = weights

    def value(self, i: Union[int, Sequence[int]], xi: np.ndarray) -> np.ndarray:
        """:math:`w_i` at array-space points *xi*, including periodic images."""
        index = np.unravel_index(i, self.grid.shape) if np.ndim(i) == 0 else tuple(i)
        xi = np.asarray(xi, dtype=np.float64).reshape(-1, self.grid.dim)

        result = np.ones(xi.shape[0])
        for k, n in enumerate(self.grid.shape):
            delta = np.mod(xi[:, k] - index[k], n)
            n_images = int(np.ceil(self.spline.n_span / n)) + 1
            axis = np.zeros_like(delta)
            for m in range(-n_images, n_images + 1):
                axis += self.spline(delta + m * n)
            result *= axis
        return result

    def sampling(self, i: Union[int, Sequence[int]], xi: np.ndarray) -> np.ndarray:
        """:math:`s_i = w_i / Q_i` at array-space points *xi*."""
        flat = i if np.ndim(i) == 0 else np.ravel_multi_index(tuple(i), self.grid.shape)
        return self.value(i, xi) / self.weights.Q[flat]


# }}}


# {{{ sampling


def adjoint_sample(
    f: Callable[[np.ndarray], np.ndarray],
    grid: CurvilinearGrid,
    spline: InterpolationSpline,
    weights: IntegrationWeights,
) -> np.ndarray:
    """Integral sampling :math:`(S f)_i = Q_i^{-1} \\int_V f w_i \\,\\mathrm{d}V`.

    :arg f: callable on physical points of shape ``(..., dim)``.
    """
    cells = grid.cell_arrays
    x = grid.physical_point(cells.xi)
    fx = np.asarray(f(x), dtype=np.float64).reshape(cells.weights.shape)

    basis = local_basis(grid, spline)
    return basis.scatter(fx * cells.weights) / weights.Q


sample = adjoint_sample


def point_sample(
    f: Callable[[np.ndarray], np.ndarray], grid: CurvilinearGrid
) -> np.ndarray:
    """Evaluate *f* at the grid points (not an integral sampling)."""
    return np.asarray(f(grid.points), dtype=np.float64).reshape(-1)


def continuous_inner(
    f: Callable[[np.ndarray], np.ndarray],
    g: np.ndarray,
    grid: CurvilinearGrid,
    spline: InterpolationSpline,
) -> float:
    """:math:`\\int_V f \\, (J g) \\,\\mathrm{d}V` with the grid quadrature."""
    cells = grid.cell_arrays
    fx = np.asarray(f(grid.physical_point(cells.xi))).reshape(cells.weights.shape)
    Jg = local_basis(grid, spline).gather(g)
    return float(np.sum(fx * Jg * cells.weights))


# }}}


# {{{ laplacian


@dataclass(frozen=True)
class DiscreteOperator:
    """Sparse discrete operator on the grid points.

    .. attribute:: matrix

        :math:`A` in CSR format.

    .. attribute:: stiffness

        The symmetric matrix :math:`K = -Q A`, bitwise symmetric.
    """

    matrix: sp.csr_matrix
    stiffness: sp.csr_matrix
    weights: IntegrationWeights

    @property
    def shape(self) -> Tuple[int, int]:
        return self.matrix.shape

    def __matmul__(self, x: np.ndarray) -> np.ndarray:
        return self.matrix @ x

    def matvec(self, x: np.ndarray) -> np.ndarray:
        return self.matrix @ x

    @property
    def weighted(self) -> sp.csr_matrix:
        """:math:`Q A = -K`."""
        return -self.stiffness

    def nonzeros_per_row(self) -> np.ndarray:
        return np.diff(self.matrix.indptr)

    def export(self, path: Union[str, Path], weights_path: Union[str, Path, None] = None) -> None:
        """Write ``i j value`` lines and a sidecar file with one ``Q_i`` per line."""
        path = Path(path)
        coo = self.matrix.tocoo()
        order = np.lexsort((coo.col, coo.row))
        with path.open("w") as fd:
            for r, c, v in zip(coo.row[order], coo.col[order], coo.data[order]):
                fd.write(f"{r} {c} {v:.17e}\n")

        if weights_path is None:
            weights_path = path.with_name(path.stem + "_weights.txt")
        Path(weights_path).write_text(
            "".join(f"{q:.17e}\n" for q in self.weights.Q)
        )


def load_operator(
    path: Union[str, Path], weights_path: Union[str, Path]
) -> DiscreteOperator:
    """Read an operator written by :meth:`DiscreteOperator.export`."""
    Q = np.loadtxt(weights_path, ndmin=1)
    data = np.loadtxt(path, ndmin=2)
    n = Q.size
    A = sp.csr_matrix(
        (data[:, 2], (data[:, 0].astype(int), data[:, 1].astype(int))), shape=(n, n)
    )
    K = -(sp.diags(Q) @ A).tocsr()
    K = ((K + K.T) * 0.5).tocsr()
    return DiscreteOperator(matrix=A, stiffness=K, weights=IntegrationWeights(Q))


def assemble_stiffness(
    grid: CurvilinearGrid, spline: InterpolationSpline
) -> sp.csr_matrix:
    """:math:`K_{ij} = \\int_V \\nabla w_i \\cdot \\nabla w_j \\,\\mathrm{d}V`."""
    basis = local_basis(grid, spline)
    cells = grid.cell_arrays
    dim = grid.dim

    # metric w * J^{-1} J^{-T}: grad_x = J^{-T} grad_xi
    Jinv = cells.inverse_jacobian
    metric = np.einsum("cgkm,cglm->cgkl", Jinv, Jinv) * cells.weights[..., None, None]

    n_cells, n_nodes = cells.weights.shape
    L = basis.n_local
    chunk = max(1, _CHUNK_ENTRIES // (n_nodes * L))

    blocks = np.empty((n_cells, L, L))
    for start in range(0, n_cells, chunk):
        stop = min(start + chunk, n_cells)
        K = np.zeros((stop - start, L, L))
        for k in range(dim):
            for l in range(dim):
                scaled = metric[start:stop, :, k, l, None] * basis.gradients[l][None]
                K += basis.gradients[k].T @ scaled
        blocks[start:stop] = 0.5 * (K + K.transpose(0, 2, 1))

    dofs = basis.dofs
    rows = np.repeat(dofs, L, axis=1).ravel()
    cols = np.tile(dofs, (1, L)).ravel()
    n = grid.n_points
    K = sp.coo_matrix((blocks.ravel(), (rows, cols)), shape=(n, n)).tocsr()
    K.sum_duplicates()

    # (K_ij + K_ji) is evaluated identically for both entries
    return ((K + K.T) * 0.5).tocsr()


def assemble_laplacian(
    grid: CurvilinearGrid,
    spline: InterpolationSpline,
    weights: Optional[IntegrationWeights] = None,
) -> DiscreteOperator:
    """Assemble :math:`A = S \\nabla^2 J` in weak form."""
    if weights is None:
        weights = assemble_weights(grid, spline)

    K = assemble_stiffness(grid, spline)
    A = (-(sp.diags(1.0 / weights.Q) @ K)).tocsr()
    A.sort_indices()
    return DiscreteOperator(matrix=A, stiffness=K, weights=weights)


# }}}


# {{{ checks


def _operator_norm(A) -> float:
    if sp.issparse(A):
        return float(abs(A).sum(axis=1).max())
    A = np.asarray(A)
    return float(np.max(np.sum(np.abs(A), axis=1)))


def check_adjointness(
    operator: Union[DiscreteOperator, sp.spmatrix, np.ndarray],
    weights: IntegrationWeights,
    trials: int = 20,
    *,
    rng: Optional[np.random.Generator] = None,
) -> float:
    """Largest Q-asymmetry over random vector pairs.

    Returns the maximum of :math:`|\\langle x, A y \\rangle_Q - \\langle A x,
    y \\rangle_Q| / (\\|x\\|_Q \\|y\\|_Q)`; zero for an identity. The
    measure is not scaled by the size of *A*, so a single perturbed entry
    shows up at its own magnitude.
    """
    if rng is None:
        rng = np.random.default_rng(0)
    A = operator.matrix if isinstance(operator, DiscreteOperator) else operator

    n = weights.Q.size
    worst = 0.0
    for _ in range(trials):
        x = rng.standard_normal(n)
        y = rng.standard_normal(n)
        lhs = weights.inner(x, A @ y)
        rhs = weights.inner(A @ x, y)
        scale = weights.norm(x) * weights.norm(y)
        worst = max(worst, abs(lhs - rhs) / scale)
    return worst


def ritz_values(
    operator: DiscreteOperator,
    n_vectors: int = 50,
    *,
    rng: Optional[np.random.Generator] = None,
) -> np.ndarray:
    """Ritz values of :math:`Q A` on the span of random vectors."""
    if rng is None:
        rng = np.random.default_rng(0)
    n = operator.shape[0]
    V, _ = np.linalg.qr(rng.standard_normal((n, min(n_vectors, n))))
    H = V.T @ (operator.weighted @ V)
    return np.linalg.eigvalsh(0.5 * (H + H.T))


def symmetry_defect(operator: DiscreteOperator) -> float:
    """:math:`\\max |Q_i A_{ij} - Q_j A_{ji}|` relative to :math:`\\max |Q A|`."""
    QA = (sp.diags(operator.weights.Q) @ operator.matrix).tocsr()
    diff = abs(QA - QA.T)
    scale = abs(QA).max()
    return float(diff.max() / scale) if scale > 0 else 0.0


def row_sum_defect(operator: DiscreteOperator) -> float:
    """:math:`\\max_i |(A 1)_i|` relative to the largest row norm of :math:`A`."""
    A = operator.matrix
    ones = np.ones(A.shape[0])
    return float(np.max(np.abs(A @ ones)) / _operator_norm(A))


# }}}
