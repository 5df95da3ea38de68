import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import dense_cells_2d, interpolated_2d
from sympres.diagnostics import (
    DIAGNOSTICS_HEADER,
    DiagnosticsRecord,
    build_report,
    energy,
    format_loss,
    loss_pct,
    mass,
    read_diagnostics,
    rms_error,
    write_diagnostics,
)
from sympres.errors import ZeroReference
from sympres.grid import make_grid
from sympres.operators import IntegrationWeights, assemble_laplacian, assemble_weights
from sympres.wave import WaveState, initial_conditions


@pytest.fixture(scope="module")
def curvilinear():
    from sympres.spline import preset

    spline = preset("medium")
    grid = make_grid("sinusoidal", (16, 16))
    weights = assemble_weights(grid, spline)
    return grid, spline, weights, assemble_laplacian(grid, spline, weights)


# {{{ mass and energy


def test_mass_of_constant(curvilinear):
    _, _, weights, _ = curvilinear
    assert mass(np.full(256, 2.5), weights) == pytest.approx(2.5, abs=1.0e-12)


def test_mass_of_initial_velocity(curvilinear):
    grid, _, weights, _ = curvilinear
    assert abs(mass(initial_conditions(grid, weights).q, weights)) <= 1.0e-14


def test_mass_against_dense_quadrature(curvilinear, rng):
    grid, spline, weights, _ = curvilinear
    xi, w, _ = dense_cells_2d(grid)
    p = rng.standard_normal(grid.shape)
    continuous = np.sum(w * interpolated_2d(spline, p, xi))
    assert mass(p.ravel(), weights) == pytest.approx(continuous, abs=1.0e-8)


def test_energy_trivial_states(curvilinear, rng):
    _, _, weights, op = curvilinear
    zero = np.zeros(256)
    assert energy(WaveState(zero, zero), op, weights) == 0.0

    q = rng.standard_normal(256)
    e = energy(WaveState(zero, q), op, weights)
    assert e == pytest.approx(0.5 * np.sum(weights.Q * q**2), rel=1.0e-15)
    assert e > 0.0


def test_energy_against_dirichlet_form(curvilinear, rng):
    grid, spline, weights, op = curvilinear
    xi, w, jac = dense_cells_2d(grid)
    inv = np.linalg.inv(jac)

    p = rng.standard_normal(grid.shape)
    grad_xi = np.stack(
        [interpolated_2d(spline, p, xi, (1, 0)), interpolated_2d(spline, p, xi, (0, 1))], axis=-1
    )
    grad = np.einsum("pkl,pk->pl", inv, grad_xi)
    dirichlet = 0.5 * np.sum(w * np.sum(grad**2, axis=-1))

    e = energy(WaveState(p.ravel(), np.zeros(256)), op, weights)
    assert e == pytest.approx(dirichlet, rel=1.0e-7)


def test_energy_uses_negative_semidefinite_operator(curvilinear, rng):
    _, _, weights, op = curvilinear
    for _ in range(10):
        p, q = rng.standard_normal((2, 256))
        assert energy(WaveState(p, q), op, weights) >= 0.0
        # same value as the A-based expression
        alt = 0.5 * weights.inner(q, q) - 0.5 * weights.inner(p, op @ p)
        assert energy(WaveState(p, q), op, weights) == pytest.approx(alt, rel=1.0e-12)


# }}}


# {{{ rms error


def uniform_weights(n):
    return IntegrationWeights(np.full(n * n, 1.0 / (n * n)))


def test_rms_error_simple_cases(rng):
    weights = uniform_weights(10)
    p_ref = rng.standard_normal(100)
    assert rms_error(p_ref, p_ref, weights) == 0.0
    assert rms_error(1.01 * p_ref, p_ref, weights) == pytest.approx(1.0, rel=1.0e-12)


def test_rms_error_single_spike(rng):
    n, h = 12, 0.37
    weights = uniform_weights(n)
    p_ref = rng.uniform(0.5, 1.5, n * n)
    p = p_ref.copy()
    p[17] += h

    norm = np.sqrt(np.sum(p_ref**2) / n**2)
    assert rms_error(p, p_ref, weights) == pytest.approx(100 * h / (n * norm), rel=1.0e-13)


@settings(max_examples=50, deadline=None)
@given(
    st.floats(1.0e-3, 1.0e3) | st.floats(-1.0e3, -1.0e-3),
    st.integers(0, 2**32 - 1),
)
def test_rms_error_homogeneous(alpha, seed):
    rng = np.random.default_rng(seed)
    weights = IntegrationWeights(rng.uniform(0.5, 1.5, 20))
    p, p_ref = rng.standard_normal((2, 20))
    assert rms_error(alpha * p, alpha * p_ref, weights) == pytest.approx(
        rms_error(p, p_ref, weights), rel=1.0e-12
    )


def test_rms_error_zero_reference():
    with pytest.raises(ZeroReference):
        rms_error(np.ones(4), np.zeros(4), uniform_weights(2))


def test_loss_pct():
    assert loss_pct(1.0, 1.0) == 0.0
    assert loss_pct(0.99, 1.0) == pytest.approx(1.0)
    assert loss_pct(-1.02, -1.0) == pytest.approx(2.0)
    assert loss_pct(1.0e-3, 0.0) == pytest.approx(0.1)


def test_format_loss():
    assert format_loss(3.5e-8) == "3.5E-08"
    assert format_loss(6.1234e-11) == "6.1E-11"
    assert format_loss(0.0) == "0.0E+00"


# }}}


# {{{ csv and report


def records(n=11, scale=1.0):
    return [
        DiagnosticsRecord(
            t=float(t), mass=0.3, energy=14.5, rms_error_pct=scale * 0.1 * t,
            mass_loss_pct=1.0e-9 * t, energy_loss_pct=2.0e-11 * t,
        )
        for t in range(n)
    ]


def test_diagnostics_csv_round_trip(tmp_path):
    path = tmp_path / "d.csv"
    text = write_diagnostics(records(), path)
    assert text.splitlines()[0] == ",".join(DIAGNOSTICS_HEADER)
    assert path.read_text() == text
    assert read_diagnostics(path) == records()


def test_read_diagnostics_missing_column(tmp_path):
    path = tmp_path / "d.csv"
    path.write_text("t,mass\n0,1\n")
    with pytest.raises(ValueError, match="missing columns"):
        read_diagnostics(path)


def test_report_empty():
    errors, losses = build_report({})
    assert errors.header == ["t"] and errors.rows == []
    assert losses.header == ["t"] and losses.rows == []
    assert errors.to_csv() == "t\n"


def test_report_one_run():
    errors, losses = build_report({"medium_uniform_20x20": records()})
    assert len(errors.rows) == 10
    assert errors.header == ["t", "medium_uniform_20x20_rms_pct"]
    assert errors.rows[0] == ["1", "0.1"]
    assert losses.rows[-1] == ["10", "1.0E-08", "2.0E-10"]


def test_report_table_shape():
    runs = {
        f"{s}_uniform_{n}x{n}": records(scale=k + 1)
        for k, s in enumerate(["coarse", "medium", "fine"])
        for n in (20, 40, 80)
    }
    errors, losses = build_report(runs)
    assert len(errors.header) == 1 + 9
    assert len(losses.header) == 1 + 18
    assert all(len(row) == 10 for row in errors.rows)
    assert len(errors.rows) == 10


def test_report_missing_times_left_blank():
    errors, _ = build_report({"short": records(n=3)})
    assert errors.rows[1] == ["2", "0.2"]
    assert errors.rows[2] == ["3", ""]


# }}}
