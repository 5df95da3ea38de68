r"""
Interpolation base functions on a uniform 1D grid.

The base function :math:`w_0` is a compactly supported, even, piecewise
polynomial on the integer knots :math:`-n_{span}, \dots, n_{span}`. Its
integer translates :math:`w_j(x) = w_0(x - j)` interpolate grid data.

The coefficients are fixed by two kinds of equations:

* exact linear constraints: smoothness across knots, vanishing value and
  derivatives at :math:`\pm n_{span}`, even symmetry, and exact reproduction
  of the monomials :math:`1, x, \dots, x^{n_{consist}-1}`;
* a least-squares fit making the interpolation of :math:`e^{i \omega x}`
  accurate for grid wavenumbers :math:`\omega \in [0, \omega_{max}]`.

The constraints are eliminated with an orthogonal null-space basis and the
remaining freedom is used to minimize the least-squares residual.

.. autoclass:: SplineParams
.. autoclass:: LsqConfig
.. autoclass:: InterpolationSpline

.. autofunction:: build_spline
.. autofunction:: preset
.. autofunction:: evaluate
.. autofunction:: dispersion_error
.. autofunction:: reproduction_defect
.. autofunction:: save_spline
.. autofunction:: load_spline
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from math import comb, factorial
from pathlib import Path
from typing import Dict, Tuple, Union

import numpy as np
import scipy.linalg as la
from numpy.polynomial import Legendre, Polynomial
from numpy.polynomial.legendre import legder, legval, legvander

from sympres.errors import InfeasibleConstraints, RankDeficientWarning


# {{{ parameters


@dataclass(frozen=True)
class SplineParams:
    """Parameters that select a unique interpolation base function.

    .. attribute:: n_span

        Support half-width in grid units, :math:`w_0(x) = 0` for
        :math:`|x| \\ge n_{span}`.

    .. attribute:: n_cont

        Number of continuous derivatives at interior knots. The same number
        of derivatives (and the value) vanish at the ends of the support.

    .. attribute:: order

        Polynomial degree on each unit interval.

    .. attribute:: n_consist

        Monomials of degree ``0 .. n_consist - 1`` are reproduced exactly.

    .. attribute:: w_max

        Largest grid wavenumber (radians per grid spacing) targeted by the
        least-squares fit.
    """

    n_span: int = 3
    n_cont: int = 1
    order: int = 11
    n_consist: int = 3
    w_max: float = 0.6

    def validate(self) -> None:
        if self.n_span < 1:
            raise ValueError(f"n_span must be positive: {self.n_span}")
        if self.order < 1:
            raise ValueError(f"order must be positive: {self.order}")
        if not 0 <= self.n_cont < self.order:
            raise ValueError(
                f"n_cont must satisfy 0 <= n_cont < order: {self.n_cont}"
            )
        if self.n_consist < 1:
            raise ValueError(f"n_consist must be positive: {self.n_consist}")
        if not 0.0 < self.w_max < np.pi:
            raise ValueError(f"w_max must lie in (0, pi): {self.w_max}")
        if self.n_consist > self.order + 1:
            raise InfeasibleConstraints(
                f"n_consist={self.n_consist} exceeds order + 1 = {self.order + 1}:"
                " cannot reproduce monomials beyond the polynomial degree"
            )


PRESETS: Dict[str, SplineParams] = {
    "coarse": SplineParams(n_span=3, n_cont=1, order=11, n_consist=3, w_max=0.9),
    "medium": SplineParams(n_span=3, n_cont=1, order=11, n_consist=3, w_max=0.6),
    "fine": SplineParams(n_span=3, n_cont=1, order=11, n_consist=4, w_max=0.5),
}


@dataclass(frozen=True)
class LsqConfig:
    """Sampling used by the least-squares fit and by the error analyzers.

    .. attribute:: n_omega

        Number of uniform wavenumber samples on :math:`[0, \\omega_{max}]`.

    .. attribute:: n_x

        Number of uniform samples of :math:`[0, 1)` in the fit.

    .. attribute:: n_eval

        Number of uniform samples of :math:`[0, 1)` used when taking maxima
        in :func:`dispersion_error` and :func:`reproduction_defect`.
    """

    n_omega: int = 64
    n_x: int = 128
    n_eval: int = 1024


# }}}


# {{{ spline


@dataclass(frozen=True)
class InterpolationSpline:
    """An even, compactly supported piecewise polynomial :math:`w_0`.

    .. attribute:: coefficients

        Array of shape ``(2 * n_span, order + 1)``. Row ``r`` holds the
        coefficients on the interval ``[k, k + 1)`` with ``k = r - n_span``
        in the shifted Legendre basis :math:`P_n(2t - 1)`, where
        ``t = x - k``. Monomial coefficients lose about five digits at
        degree 11; see :attr:`monomial_coefficients`.
    """

    params: SplineParams
    coefficients: np.ndarray
    lsq_config: LsqConfig = field(default_factory=LsqConfig)
    constraint_residual: float = 0.0

    def __post_init__(self) -> None:
        c = np.array(self.coefficients, dtype=np.float64)
        c.setflags(write=False)
        object.__setattr__(self, "coefficients", c)

        expected = (2 * self.params.n_span, self.params.order + 1)
        if c.shape != expected:
            raise ValueError(
                f"coefficients have shape {c.shape}, expected {expected}"
            )

    @property
    def n_span(self) -> int:
        return self.params.n_span

    @property
    def monomial_coefficients(self) -> np.ndarray:
        """Ascending-degree coefficients in the local coordinate ``t``."""
        return self.coefficients @ legendre_to_monomial(self.params.order).T

    @property
    def breakpoints(self) -> np.ndarray:
        return np.arange(-self.n_span, self.n_span + 1)

    @property
    def offsets(self) -> np.ndarray:
        """Left knots ``k`` of the unit intervals, one per coefficient row."""
        return np.arange(-self.n_span, self.n_span)

    def interval_values(self, t: np.ndarray, derivative: int = 0) -> np.ndarray:
        """Evaluate every interval polynomial at local coordinates *t*.

        :returns: array of shape ``(2 * n_span, *t.shape)`` whose row ``r``
            is :math:`w_0^{(k)}(r - n_{span} + t)`.
        """
        c = _derivative_coefficients(self.coefficients, derivative)
        t = np.asarray(t, dtype=np.float64)
        return legval(2.0 * t - 1.0, c.T)

    def __call__(self, x, derivative: int = 0):
        return evaluate(self, x, derivative)


def _derivative_coefficients(c: np.ndarray, derivative: int) -> np.ndarray:
    if derivative == 0:
        return c
    if derivative < 0:
        raise ValueError(f"derivative must be nonnegative: {derivative}")

    if derivative > c.shape[1] - 1:
        return np.zeros((c.shape[0], 1))
    # d/dt P_n(2t - 1) = 2 P_n'(2t - 1)
    return legder(c, m=derivative, scl=2.0, axis=1)


def evaluate(spline: InterpolationSpline, x, derivative: int = 0):
    """Evaluate the *derivative*-th derivative of :math:`w_0` at *x*.

    Intervals are half-open, ``[k, k + 1)``. The result is exactly zero
    outside ``(-n_span, n_span)``.
    """
    scalar = np.ndim(x) == 0
    x = np.atleast_1d(np.asarray(x, dtype=np.float64))

    c = _derivative_coefficients(spline.coefficients, derivative)
    k = np.floor(x)
    inside = np.abs(x) < spline.n_span

    result = np.zeros_like(x)
    rows = (k[inside] + spline.n_span).astype(np.intp)
    t = x[inside] - k[inside]

    value = np.empty_like(t)
    for r in np.unique(rows):
        mask = rows == r
        value[mask] = legval(2.0 * t[mask] - 1.0, c[r])
    result[inside] = value

    return float(result[0]) if scalar else result


# }}}


# {{{ constraints

# The fit and the stored coefficients use a per-interval shifted Legendre basis
# P_n(2t - 1): the monomial basis on [0, 1] is too ill-conditioned at
# degree 11 to meet the constraint tolerances.


def legendre_to_monomial(order: int) -> np.ndarray:
    """Matrix ``B`` with ``c = B a``: shifted Legendre to ascending monomials."""
    B = np.zeros((order + 1, order + 1))
    for n in range(order + 1):
        for k in range(n + 1):
            B[k, n] = (-1) ** (n + k) * comb(n, k) * comb(n + k, k)
    return B


def _legendre_end_derivatives(order: int, n_cont: int, end: int) -> np.ndarray:
    """Derivatives ``0..n_cont`` of every ``P_n(2t - 1)`` at ``t = end``."""
    rows = np.zeros((n_cont + 1, order + 1))
    for k in range(n_cont + 1):
        for n in range(k, order + 1):
            value = factorial(n + k) // (factorial(k) * factorial(n - k))
            rows[k, n] = value if end == 1 else (-1) ** (n + k) * value
    return rows


def _monomial_in_legendre(m: int, order: int) -> np.ndarray:
    coef = Polynomial.basis(m).convert(kind=Legendre, domain=[0.0, 1.0]).coef
    out = np.zeros(order + 1)
    out[: coef.size] = coef
    return out


def constraint_system(params: SplineParams) -> Tuple[np.ndarray, np.ndarray]:
    """Assemble the linear equality constraints ``C a = d``.

    The unknown ``a`` holds the shifted Legendre coefficients of every
    interval, row-major in the interval index.
    """
    n_span, n_cont, order = params.n_span, params.n_cont, params.order
    n_int = 2 * n_span
    n_coef = order + 1
    n = n_int * n_coef

    def col(r: int, d: int) -> int:
        return r * n_coef + d

    rows = []
    rhs = []

    def add(row: np.ndarray, value: float = 0.0) -> None:
        rows.append(row)
        rhs.append(value)

    at0 = _legendre_end_derivatives(order, n_cont, 0)
    at1 = _legendre_end_derivatives(order, n_cont, 1)

    # smoothness across interior knots
    for r in range(1, n_int):
        for k in range(n_cont + 1):
            row = np.zeros(n)
            row[col(r - 1, 0):col(r, 0)] = at1[k]
            row[col(r, 0):col(r + 1, 0)] -= at0[k]
            add(row)

    # vanishing at both ends of the support
    for k in range(n_cont + 1):
        row = np.zeros(n)
        row[col(0, 0):col(1, 0)] = at0[k]
        add(row)

        row = np.zeros(n)
        row[col(n_int - 1, 0):] = at1[k]
        add(row)

    # even symmetry: p_k(t) = p_{-k-1}(1 - t) and P_n(1 - 2t) = (-1)^n P_n(2t - 1)
    for k in range(n_span):
        r, r_mirror = k + n_span, n_span - k - 1
        for e in range(n_coef):
            row = np.zeros(n)
            row[col(r, e)] = 1.0
            row[col(r_mirror, e)] = -((-1.0) ** e)
            add(row)

    # reproduction on [0, 1): sum_j j^m p_{-j}(t) = t^m, coefficient-wise
    js = np.arange(-n_span + 1, n_span + 1)
    for m in range(params.n_consist):
        target = _monomial_in_legendre(m, order)
        for e in range(n_coef):
            row = np.zeros(n)
            for j in js:
                row[col(-j + n_span, e)] = float(j) ** m
            add(row, target[e])

    return np.array(rows), np.array(rhs)


def least_squares_system(
    params: SplineParams, lsq_config: LsqConfig
) -> Tuple[np.ndarray, np.ndarray]:
    """Real least-squares rows for the plane-wave interpolation residual.

    Columns follow the unknown ordering of :func:`constraint_system`.
    """
    n_span, order = params.n_span, params.order

    omega = np.linspace(0.0, params.w_max, lsq_config.n_omega)
    x = np.arange(lsq_config.n_x) / lsq_config.n_x
    js = np.arange(-n_span + 1, n_span + 1)

    basis = legvander(2.0 * x - 1.0, order)          # (n_x, n_coef)
    phase = np.exp(1j * omega[:, None] * js)        # (n_omega, n_j)

    # interval r = n_span - j is weighted by the phase of lattice point j
    mat = np.zeros((omega.size, x.size, 2 * n_span, order + 1), dtype=np.complex128)
    for jj, j in enumerate(js):
        mat[:, :, n_span - j, :] = phase[:, jj, None, None] * basis[None, :, :]

    mat = mat.reshape(omega.size * x.size, -1)
    rhs = np.exp(1j * omega[:, None] * x[None, :]).reshape(-1)

    return np.vstack([mat.real, mat.imag]), np.concatenate([rhs.real, rhs.imag])


def constrained_lstsq(
    A: np.ndarray,
    b: np.ndarray,
    C: np.ndarray,
    d: np.ndarray,
    *,
    rtol: float = 1.0e-12,
) -> np.ndarray:
    """Solve ``min |A c - b|`` subject to ``C c = d`` by null-space elimination.

    :raises InfeasibleConstraints: if ``C c = d`` has no solution or leaves
        no degrees of freedom.
    """
    U, s, Vt = la.svd(C, full_matrices=True)
    rank = int(np.sum(s > rtol * s[0])) if s.size else 0

    # particular (minimum-norm) solution of C c = d
    c0 = Vt[:rank].T @ ((U[:, :rank].T @ d) / s[:rank])
    residual = float(np.max(np.abs(C @ c0 - d), initial=0.0))
    scale = max(1.0, float(np.max(np.abs(d), initial=0.0)))
    if residual > 1.0e-8 * scale:
        raise InfeasibleConstraints(
            f"equality constraints are inconsistent (residual {residual:.3e})"
        )

    Z = Vt[rank:].T
    if Z.shape[1] == 0:
        raise InfeasibleConstraints(
            "equality constraints leave no degrees of freedom for the fit"
        )

    AZ = A @ Z
    z, _, zrank, _ = la.lstsq(AZ, b - A @ c0, lapack_driver="gelsd")
    if zrank < Z.shape[1]:
        warnings.warn(
            f"reduced least-squares system is rank deficient ({zrank} < "
            f"{Z.shape[1]}); using the minimum-norm solution",
            RankDeficientWarning,
            stacklevel=3,
        )

    return c0 + Z @ z


# }}}


# {{{ construction


def build_spline(
    params: SplineParams, lsq_config: LsqConfig | None = None
) -> InterpolationSpline:
    """Construct the interpolation base function selected by *params*."""
    if lsq_config is None:
        lsq_config = LsqConfig()
    params.validate()

    C, d = constraint_system(params)
    A, b = least_squares_system(params, lsq_config)
    a = constrained_lstsq(A, b, C, d).reshape(2 * params.n_span, params.order + 1)

    spline = InterpolationSpline(params=params, coefficients=a, lsq_config=lsq_config)
    object.__setattr__(spline, "constraint_residual", constraint_residual(spline))
    return spline


def preset(name: str, lsq_config: LsqConfig | None = None) -> InterpolationSpline:
    """Build one of the ``"coarse"``, ``"medium"`` or ``"fine"`` splines."""
    try:
        params = PRESETS[name]
    except KeyError:
        raise ValueError(
            f"unknown spline preset '{name}' (choose from {sorted(PRESETS)})"
        ) from None
    return build_spline(params, lsq_config)


def constraint_residuals(spline: InterpolationSpline) -> Dict[str, float]:
    """Defects of each constraint family, measured on the stored polynomials.

    Knot conditions use one-sided endpoint derivatives; symmetry and
    reproduction are sampled on ``lsq_config.n_eval`` points per interval.
    """
    p = spline.params
    c = spline.coefficients
    n_int = c.shape[0]

    jumps = []
    ends = []
    for k in range(p.n_cont + 1):
        ck = _derivative_coefficients(c, k)
        signs = (-1.0) ** np.arange(ck.shape[1])
        left = ck @ signs                  # P_n(-1) = (-1)^n, at t = 0
        right = np.sum(ck, axis=1)         # P_n(1) = 1, at t = 1
        jumps.append(np.abs(right[:-1] - left[1:]))
        ends.append(abs(left[0]))
        ends.append(abs(right[-1]))

    t = _eval_points(spline)
    values = spline.interval_values(t)
    mirrored = spline.interval_values(1.0 - t)[::-1]
    symmetry = np.max(np.abs(values - mirrored))

    reproduction = max(reproduction_defect(spline, m) for m in range(p.n_consist))

    return {
        "continuity": float(np.max(jumps)) if n_int > 1 else 0.0,
        "boundary": float(max(ends)),
        "symmetry": float(symmetry),
        "reproduction": float(reproduction),
    }


def constraint_residual(spline: InterpolationSpline) -> float:
    """Largest entry of :func:`constraint_residuals`."""
    return max(constraint_residuals(spline).values())


# }}}


# {{{ analysis


def _lattice_sum(spline: InterpolationSpline, x: np.ndarray, weights) -> np.ndarray:
    """Evaluate ``sum_j weights(j) w_0(x - j)`` for ``x`` in ``[0, 1)``."""
    js = np.arange(-spline.n_span + 1, spline.n_span + 1)
    values = spline.interval_values(x)          # row r <-> w_0(r - n_span + x)
    total = 0.0
    for j in js:
        total = total + weights(j) * values[spline.n_span - j]
    return total


def _eval_points(spline: InterpolationSpline) -> np.ndarray:
    n = spline.lsq_config.n_eval
    return np.arange(n) / n


def dispersion_error(spline: InterpolationSpline, omega: float) -> float:
    """Largest error when interpolating :math:`e^{i \\omega x}` from its samples.

    The maximum is taken over a uniform sampling of one grid cell.
    """
    x = _eval_points(spline)
    approx = _lattice_sum(spline, x, lambda j: np.exp(1j * omega * j))
    return float(np.max(np.abs(approx - np.exp(1j * omega * x))))


def dispersion_curve(spline: InterpolationSpline, omega: np.ndarray) -> np.ndarray:
    """Vectorized :func:`dispersion_error` over an array of wavenumbers."""
    return np.array([dispersion_error(spline, float(w)) for w in np.ravel(omega)])


def reproduction_defect(spline: InterpolationSpline, m: int) -> float:
    """Largest error when interpolating the monomial :math:`x^m`."""
    x = _eval_points(spline)
    approx = _lattice_sum(spline, x, lambda j: float(j) ** m)
    return float(np.max(np.abs(approx - x**m)))


# }}}


# {{{ text format


def save_spline(spline: InterpolationSpline, path: Union[str, Path]) -> None:
    """Write *spline* as plain text.

    The first line holds ``n_span n_cont order n_consist w_max``; every other
    line is ``k c_0 c_1 ... c_order`` for the interval ``[k, k + 1)``, with
    coefficients in the shifted Legendre basis of
    :attr:`InterpolationSpline.coefficients`.
    """
    p = spline.params
    lines = [f"{p.n_span} {p.n_cont} {p.order} {p.n_consist} {p.w_max!r}"]
    for k, row in zip(spline.offsets, spline.coefficients):
        lines.append(" ".join([str(int(k))] + [f"{c:.17e}" for c in row]))

    Path(path).write_text("\n".join(lines) + "\n")


def load_spline(path: Union[str, Path]) -> InterpolationSpline:
    """Read a spline written by :func:`save_spline`."""
    lines = [ln for ln in Path(path).read_text().splitlines() if ln.strip()]
    if not lines:
        raise ValueError(f"empty spline file: '{path}'")

    header = lines[0].split()
    if len(header) != 5:
        raise ValueError(f"malformed spline header: '{lines[0]}'")
    params = SplineParams(
        n_span=int(header[0]),
        n_cont=int(header[1]),
        order=int(header[2]),
        n_consist=int(header[3]),
        w_max=float(header[4]),
    )

    coefficients = np.zeros((2 * params.n_span, params.order + 1))
    seen = set()
    for line in lines[1:]:
        fields = line.split()
        k = int(fields[0])
        if not -params.n_span <= k < params.n_span:
            raise ValueError(f"interval {k} outside the support")
        if len(fields) != params.order + 2:
            raise ValueError(f"interval {k}: expected {params.order + 1} coefficients")
        coefficients[k + params.n_span] = [float(v) for v in fields[1:]]
        seen.add(k)

    if len(seen) != 2 * params.n_span:
        raise ValueError(f"spline file '{path}' is missing intervals")

    spline = InterpolationSpline(params=params, coefficients=coefficients)
    object.__setattr__(spline, "constraint_residual", constraint_residual(spline))
    return spline


# }}}
