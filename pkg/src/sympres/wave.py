r"""
Semi-discrete wave equation :math:`p'' = A p` on a periodic grid.

The reference problem is a traveling Gaussian on the periodic unit square,

.. math::

    p(x, y, t) = \exp\left(-\left(
        \frac{\operatorname{mod}(x - y - \sqrt{2} t + 1/2, 1) - 1/2}{\sqrt{0.03}}
        \right)^2\right),

and the system :math:`p' = q, q' = A p` is advanced with the classical
four-stage Runge-Kutta method.

.. autoclass:: WaveState
.. autoclass:: RunConfig
.. autoclass:: Snapshot

.. autofunction:: exact_solution
.. autofunction:: exact_time_derivative
.. autofunction:: initial_conditions
.. autofunction:: rk4_step
.. autofunction:: spectral_radius
.. autofunction:: run
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace
from typing import Iterator, List, Optional, Tuple, Union

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import eigsh

from sympres.diagnostics import DiagnosticsRecord, energy, mass, make_record
from sympres.errors import UnstableRun
from sympres.grid import DEFAULT_QUAD_POINTS, CurvilinearGrid, make_grid
from sympres.operators import (
    DiscreteOperator,
    IntegrationWeights,
    assemble_laplacian,
    assemble_weights,
    point_sample,
)
from sympres.spline import PRESETS, InterpolationSpline, SplineParams, build_spline

logger = logging.getLogger(__name__)

WIDTH_SQUARED = 0.03
SPEED = np.sqrt(2.0)
UNSTABLE_THRESHOLD = 1.0e6


# {{{ exact solution


def _phase(x, y, t):
    return np.mod(x - y - t * SPEED + 0.5, 1.0) - 0.5


def exact_solution(x, y, t: float):
    """Traveling Gaussian along the diagonal of the periodic unit square."""
    s = _phase(np.asarray(x, dtype=np.float64), np.asarray(y, dtype=np.float64), t)
    return np.exp(-(s**2) / WIDTH_SQUARED)


def exact_time_derivative(x, y, t: float):
    """:math:`\\partial p / \\partial t` of :func:`exact_solution`."""
    s = _phase(np.asarray(x, dtype=np.float64), np.asarray(y, dtype=np.float64), t)
    return 2.0 * SPEED * s / WIDTH_SQUARED * np.exp(-(s**2) / WIDTH_SQUARED)


def reference_fields(grid: CurvilinearGrid, t: float) -> Tuple[np.ndarray, np.ndarray]:
    """Point-sampled exact solution and its time derivative at time *t*."""
    if grid.dim != 2:
        raise ValueError("the traveling Gaussian is defined on 2D grids")

    def p(x):
        return exact_solution(x[..., 0], x[..., 1], t)

    def q(x):
        return exact_time_derivative(x[..., 0], x[..., 1], t)

    return point_sample(p, grid), point_sample(q, grid)


# }}}


# {{{ state


@dataclass(frozen=True)
class WaveState:
    """Pressure *p*, its time derivative *q*, and the time *t*."""

    p: np.ndarray
    q: np.ndarray
    t: float = 0.0

    def __post_init__(self) -> None:
        if np.shape(self.p) != np.shape(self.q):
            raise ValueError(
                f"p and q have different shapes: {np.shape(self.p)} != {np.shape(self.q)}"
            )


def remove_mass(
    q: np.ndarray, weights: IntegrationWeights
) -> np.ndarray:
    """Q-orthogonal projection removing the constant component of *q*.

    Computes :math:`q - b (b^T Q q) / (b^T Q b)` with :math:`b = 1`.
    """
    return q - np.sum(weights.Q * q) / np.sum(weights.Q)


def initial_conditions(
    grid: CurvilinearGrid, weights: IntegrationWeights
) -> WaveState:
    """Point-sampled reference at ``t = 0`` with a mass-free time derivative."""
    p, q = reference_fields(grid, 0.0)
    return WaveState(p=p, q=remove_mass(q, weights), t=0.0)


def rk4_step(
    state: WaveState, operator: Union[DiscreteOperator, np.ndarray], dt: float
) -> WaveState:
    """One classical Runge-Kutta step for :math:`p' = q, q' = A p`."""
    A = operator.matrix if isinstance(operator, DiscreteOperator) else operator
    p, q = state.p, state.q

    k1p, k1q = q, A @ p
    p2, q2 = p + 0.5 * dt * k1p, q + 0.5 * dt * k1q
    k2p, k2q = q2, A @ p2
    p3, q3 = p + 0.5 * dt * k2p, q + 0.5 * dt * k2q
    k3p, k3q = q3, A @ p3
    p4, q4 = p + dt * k3p, q + dt * k3q
    k4p, k4q = q4, A @ p4

    return WaveState(
        p=p + dt / 6.0 * (k1p + 2.0 * k2p + 2.0 * k3p + k4p),
        q=q + dt / 6.0 * (k1q + 2.0 * k2q + 2.0 * k3q + k4q),
        t=state.t + dt,
    )


def spectral_radius(
    operator: DiscreteOperator,
    *,
    rtol: float = 1.0e-8,
    rng: Optional[np.random.Generator] = None,
) -> float:
    """Spectral radius of :math:`A` by Lanczos iteration.

    :math:`A = -Q^{-1} K` is similar to the symmetric matrix
    :math:`-Q^{-1/2} K Q^{-1/2}`, whose largest-magnitude eigenvalue is
    computed with :func:`scipy.sparse.linalg.eigsh`.
    """
    if rng is None:
        rng = np.random.default_rng(0)
    n = operator.shape[0]
    scale = sp.diags(1.0 / np.sqrt(operator.weights.Q))
    B = (scale @ operator.stiffness @ scale).tocsr()
    if n <= 2:
        return float(np.max(np.abs(np.linalg.eigvalsh(B.toarray()))))

    v0 = rng.standard_normal(n)
    value = eigsh(B, k=1, which="LM", tol=rtol, v0=v0, return_eigenvectors=False)
    return float(abs(value[0]))


# }}}


# {{{ runs


@dataclass(frozen=True)
class RunConfig:
    """Parameters of one wave-equation experiment.

    .. attribute:: dt

        Requested time step, clipped by the RK4 stability estimate
        :math:`2.5 / \\sqrt{\\rho(A)}`. The step actually used divides
        *report_interval* exactly. The default keeps the RK4 energy drift
        over ``t_end = 10`` below ``1e-11`` relative on the traveling
        Gaussian; the drift is set by the solution's frequencies, not by
        the mesh size.
    """

    spline: Union[str, SplineParams] = "medium"
    mesh: str = "uniform"
    n: int = 20
    amplitude: float = 0.05
    t_end: float = 10.0
    dt: float = 2.5e-4
    report_interval: float = 1.0
    quad_points: int = DEFAULT_QUAD_POINTS

    @property
    def label(self) -> str:
        name = self.spline if isinstance(self.spline, str) else "custom"
        return f"{name}_{self.mesh}_{self.n}x{self.n}"

    def spline_params(self) -> SplineParams:
        if isinstance(self.spline, SplineParams):
            return self.spline
        try:
            return PRESETS[self.spline]
        except KeyError:
            raise ValueError(f"unknown spline preset: '{self.spline}'") from None


@dataclass(frozen=True)
class Snapshot:
    """State and diagnostics at one report time."""

    t: float
    state: WaveState
    record: DiagnosticsRecord


@dataclass
class Problem:
    """Discretization pieces shared by the steps of a run."""

    config: RunConfig
    spline: InterpolationSpline
    grid: CurvilinearGrid
    weights: IntegrationWeights
    operator: DiscreteOperator
    dt: float = field(default=0.0)
    steps_per_report: int = field(default=0)

    @classmethod
    def from_config(
        cls, config: RunConfig, spline: Optional[InterpolationSpline] = None
    ) -> "Problem":
        if spline is None:
            spline = build_spline(config.spline_params())
        grid = make_grid(
            config.mesh,
            (config.n, config.n),
            amplitude=config.amplitude,
            quad_points=config.quad_points,
        )
        weights = assemble_weights(grid, spline)
        operator = assemble_laplacian(grid, spline, weights)

        problem = cls(config, spline, grid, weights, operator)
        problem.dt, problem.steps_per_report = problem.time_step()
        return problem

    def time_step(self) -> Tuple[float, int]:
        cfg = self.config
        if cfg.dt <= 0.0:
            raise ValueError(f"dt must be positive: {cfg.dt}")

        dt = cfg.dt
        rho = spectral_radius(self.operator)
        if rho > 0.0:
            dt = min(dt, 2.5 / np.sqrt(rho))

        steps = max(1, int(np.ceil(cfg.report_interval / dt - 1.0e-9)))
        return cfg.report_interval / steps, steps

    def record(
        self, state: WaveState, initial: Optional[DiagnosticsRecord]
    ) -> DiagnosticsRecord:
        p_ref, _ = reference_fields(self.grid, state.t)
        return make_record(state, p_ref, self.operator, self.weights, initial)


def run_iter(
    config: RunConfig,
    *,
    spline: Optional[InterpolationSpline] = None,
    problem: Optional[Problem] = None,
) -> Iterator[Snapshot]:
    """Yield a :class:`Snapshot` at ``t = 0`` and after every report interval.

    :raises UnstableRun: if any entry of the state exceeds ``1e6``.
    """
    if problem is None:
        problem = Problem.from_config(config, spline)
    logger.info(
        "run %s: dt=%.3e, %d steps per report",
        config.label, problem.dt, problem.steps_per_report,
    )

    state = initial_conditions(problem.grid, problem.weights)
    initial = problem.record(state, None)
    yield Snapshot(0.0, state, initial)

    n_reports = int(round(config.t_end / config.report_interval))
    dt = problem.dt
    A = problem.operator.matrix
    for report in range(1, n_reports + 1):
        for _ in range(problem.steps_per_report):
            state = rk4_step(state, A, dt)

        if not (np.all(np.abs(state.p) < UNSTABLE_THRESHOLD)
                and np.all(np.abs(state.q) < UNSTABLE_THRESHOLD)):
            raise UnstableRun(
                f"{config.label}: state exceeds {UNSTABLE_THRESHOLD:g} at "
                f"t={state.t:.3f} (dt={dt:.3e} too large?)"
            )

        # avoid accumulated round-off in the reported time
        state = replace(state, t=report * config.report_interval)
        yield Snapshot(state.t, state, problem.record(state, initial))


def run(
    config: RunConfig,
    *,
    spline: Optional[InterpolationSpline] = None,
    problem: Optional[Problem] = None,
) -> List[Snapshot]:
    """Run an experiment to ``config.t_end``, see :func:`run_iter`."""
    return list(run_iter(config, spline=spline, problem=problem))


# }}}
