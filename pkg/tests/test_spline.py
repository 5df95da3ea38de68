import warnings
from functools import lru_cache

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.special import eval_legendre

from sympres.errors import InfeasibleConstraints
from sympres.spline import (
    PRESETS,
    LsqConfig,
    SplineParams,
    build_spline,
    constrained_lstsq,
    constraint_residuals,
    dispersion_curve,
    dispersion_error,
    evaluate,
    legendre_to_monomial,
    load_spline,
    preset,
    reproduction_defect,
    save_spline,
)


def legendre_sum(coefficients, t):
    """Independent evaluation of sum_n c_n P_n(2 t - 1)."""
    return sum(c * eval_legendre(n, 2.0 * t - 1.0) for n, c in enumerate(coefficients))


# {{{ construction


@pytest.mark.parametrize("name", sorted(PRESETS))
def test_preset_parameters(name, splines):
    p = splines[name].params
    assert (p.n_span, p.n_cont, p.order) == (3, 1, 11)
    assert (p.w_max, p.n_consist) == {
        "coarse": (0.9, 3), "medium": (0.6, 3), "fine": (0.5, 4),
    }[name]


@pytest.mark.parametrize("name", sorted(PRESETS))
def test_constraint_residuals(name, splines):
    residuals = constraint_residuals(splines[name])
    assert set(residuals) == {"continuity", "boundary", "symmetry", "reproduction"}
    assert max(residuals.values()) <= 1.0e-10
    assert splines[name].constraint_residual == max(residuals.values())


def test_medium_reproduces_quadratics(medium, rng):
    x = rng.uniform(-10.0, 10.0, 200)
    js = np.arange(-20, 21)
    for m in range(3):
        approx = sum(float(j) ** m * medium(x - j) for j in js)
        np.testing.assert_allclose(approx, x**m, atol=1.0e-10 * max(1.0, 10.0**m))


def test_partition_of_unity_with_n_consist_one(rng):
    spline = build_spline(SplineParams(n_consist=1, w_max=0.6))
    x = rng.uniform(0.0, 1.0, 1000)
    total = sum(spline(x - j) for j in range(-4, 5))
    assert np.max(np.abs(total - 1.0)) < 1.0e-10


def test_fine_reproduces_cubics(splines, rng):
    fine = splines["fine"]
    x = rng.uniform(0.0, 1.0, 1000)
    total = sum(float(j) ** 3 * fine(x - j) for j in range(-4, 5))
    assert np.max(np.abs(total - x**3)) < 1.0e-10


def test_infeasible_reproduction_count():
    with pytest.raises(InfeasibleConstraints):
        build_spline(SplineParams(n_consist=13, order=11))


@pytest.mark.parametrize(
    "params",
    [
        SplineParams(n_span=0),
        SplineParams(n_cont=11, order=11),
        SplineParams(w_max=0.0),
        SplineParams(w_max=np.pi),
        SplineParams(n_consist=0),
    ],
)
def test_invalid_parameters(params):
    with pytest.raises(ValueError):
        build_spline(params)


def test_overconstrained_low_order_is_infeasible():
    # a cubic on two intervals cannot vanish to first order at both ends,
    # stay C^1 and reproduce 1, x, x^2
    with pytest.raises(InfeasibleConstraints):
        build_spline(SplineParams(n_span=1, n_cont=1, order=3, n_consist=3))


def test_constrained_lstsq_oracle(rng):
    # minimize |A x - b| subject to x_0 + x_1 = 1: closed form via KKT
    A = rng.standard_normal((20, 4))
    b = rng.standard_normal(20)
    C = np.array([[1.0, 1.0, 0.0, 0.0]])
    d = np.array([1.0])

    kkt = np.block([[2 * A.T @ A, C.T], [C, np.zeros((1, 1))]])
    rhs = np.concatenate([2 * A.T @ b, d])
    expected = np.linalg.solve(kkt, rhs)[:4]

    np.testing.assert_allclose(constrained_lstsq(A, b, C, d), expected, atol=1.0e-12)


def test_constrained_lstsq_rejects_inconsistent_constraints():
    C = np.array([[1.0, 0.0], [1.0, 0.0]])
    d = np.array([0.0, 1.0])
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        with pytest.raises(InfeasibleConstraints):
            constrained_lstsq(np.eye(2), np.zeros(2), C, d)


def test_legendre_to_monomial():
    order = 6
    B = legendre_to_monomial(order)
    t = np.linspace(0.0, 1.0, 7)
    for n in range(order + 1):
        np.testing.assert_allclose(
            np.polynomial.polynomial.polyval(t, B[:, n]),
            eval_legendre(n, 2.0 * t - 1.0),
            atol=1.0e-12,
        )


# }}}


# {{{ evaluation


def test_zero_at_support_end(splines):
    for spline in splines.values():
        assert evaluate(spline, spline.n_span) == 0.0
        assert evaluate(spline, -spline.n_span) == 0.0


def test_outside_support(medium):
    assert evaluate(medium, -4.5, derivative=1) == 0.0
    assert np.all(medium(np.array([-7.0, 3.0, 3.5, 100.0])) == 0.0)


def test_evaluate_matches_direct_sum(medium):
    # x = 0.3 lies in [0, 1), stored as row n_span
    expected = legendre_sum(medium.coefficients[medium.n_span], 0.3)
    assert abs(evaluate(medium, 0.3) - expected) <= 1.0e-15


def test_monomial_coefficients_agree(medium, rng):
    t = rng.uniform(0.0, 1.0, 50)
    for r in range(2 * medium.n_span):
        mono = np.polynomial.polynomial.polyval(t, medium.monomial_coefficients[r])
        np.testing.assert_allclose(
            mono, legendre_sum(medium.coefficients[r], t), atol=1.0e-10
        )


def test_derivative_matches_finite_difference(medium, rng):
    x = rng.uniform(-2.9, 2.9, 100)
    x = x[np.abs(x - np.round(x)) > 1.0e-3]
    h = 1.0e-6
    fd = (medium(x + h) - medium(x - h)) / (2 * h)
    np.testing.assert_allclose(medium(x, derivative=1), fd, atol=1.0e-7)


def test_first_derivative_continuous_at_knots(medium):
    for k in range(-3, 4):
        left = medium(k - 1.0e-12, derivative=1)
        right = medium(k, derivative=1)
        assert abs(left - right) < 1.0e-9


def test_half_open_intervals(medium):
    row = medium.n_span + 1           # interval [1, 2)
    expected = legendre_sum(medium.coefficients[row], 0.0)
    assert evaluate(medium, 1.0) == pytest.approx(expected, abs=1.0e-15)


def test_negative_derivative_rejected(medium):
    with pytest.raises(ValueError):
        evaluate(medium, 0.0, derivative=-1)


@lru_cache(maxsize=None)
def _medium():
    return preset("medium")


@settings(max_examples=200, deadline=None)
@given(st.floats(-4.0, 4.0, allow_nan=False))
def test_even_symmetry(x):
    spline = _medium()
    assert abs(spline(x) - spline(-x)) <= 1.0e-12


def test_even_symmetry_random_points(splines, rng):
    x = rng.uniform(-3.5, 3.5, 1000)
    for spline in splines.values():
        assert np.max(np.abs(spline(x) - spline(-x))) <= 1.0e-12


# }}}


# {{{ analysis


def test_dispersion_error_zero_frequency(splines):
    for spline in splines.values():
        assert dispersion_error(spline, 0.0) <= 1.0e-12


def test_coarse_dispersion_at_028pi(splines):
    assert dispersion_error(splines["coarse"], 0.28 * np.pi) <= 1.0e-4


def test_fine_dispersion_at_018pi(splines):
    assert dispersion_error(splines["fine"], 0.18 * np.pi) <= 2.0e-5


def test_dispersion_error_brute_force(medium):
    omega = 0.4
    x = np.arange(medium.lsq_config.n_eval) / medium.lsq_config.n_eval
    approx = sum(np.exp(1j * omega * j) * medium(x - j) for j in range(-5, 6))
    expected = np.max(np.abs(approx - np.exp(1j * omega * x)))
    assert dispersion_error(medium, omega) == pytest.approx(expected, rel=1.0e-10)


def test_dispersion_curve_vectorizes(medium):
    omega = np.array([0.1, 0.5, 1.0])
    np.testing.assert_array_equal(
        dispersion_curve(medium, omega), [dispersion_error(medium, w) for w in omega]
    )


@pytest.mark.parametrize("m", [0, 2])
def test_reproduction_defect_consistent_orders(medium, m):
    assert reproduction_defect(medium, m) <= 1.0e-10


def test_reproduction_defect_unreproduced_degree(medium):
    m = 5
    x = np.arange(medium.lsq_config.n_eval) / medium.lsq_config.n_eval
    js = np.arange(-medium.n_span - 1, medium.n_span + 2)
    brute = sum(float(j) ** m * medium(x - j) for j in js)
    expected = np.max(np.abs(brute - x**m))

    value = reproduction_defect(medium, m)
    assert value > 1.0e-6
    assert value == pytest.approx(expected, rel=1.0e-9)


def test_small_frequency_slope(splines):
    omega = np.array([0.02, 0.05])
    for name, expected in [("coarse", 3.0), ("medium", 3.0), ("fine", 4.0)]:
        err = dispersion_curve(splines[name], omega)
        slope = np.diff(np.log(err))[0] / np.diff(np.log(omega))[0]
        assert slope == pytest.approx(expected, abs=0.15), name


def test_smaller_w_max_not_much_worse(splines):
    omega = np.linspace(0.05, 0.6, 12)
    coarse = dispersion_curve(splines["coarse"], omega)
    medium = dispersion_curve(splines["medium"], omega)
    assert np.all(medium <= 10.0 * coarse)


# }}}


# {{{ file format


@pytest.mark.parametrize("name", sorted(PRESETS))
def test_save_load_round_trip(name, splines, tmp_path, rng):
    spline = splines[name]
    path = tmp_path / f"{name}.txt"
    save_spline(spline, path)
    loaded = load_spline(path)

    assert loaded.params == spline.params
    x = rng.uniform(-3.0, 3.0, 100)
    assert np.max(np.abs(loaded(x) - spline(x))) <= 1.0e-15
    assert loaded.constraint_residual <= 1.0e-10


def test_load_rejects_truncated_file(medium, tmp_path):
    path = tmp_path / "s.txt"
    save_spline(medium, path)
    lines = path.read_text().splitlines()
    path.write_text("\n".join(lines[:-1]) + "\n")
    with pytest.raises(ValueError, match="missing intervals"):
        load_spline(path)


def test_load_rejects_bad_header(tmp_path):
    path = tmp_path / "s.txt"
    path.write_text("3 1 11\n")
    with pytest.raises(ValueError, match="header"):
        load_spline(path)


# }}}


def test_lsq_config_changes_fit():
    a = build_spline(PRESETS["medium"], LsqConfig(n_omega=16, n_x=32))
    b = build_spline(PRESETS["medium"])
    assert not np.allclose(a.coefficients, b.coefficients)
    assert a.constraint_residual <= 1.0e-10
