import numpy as np
import pytest

from sympres.cli import main
from sympres.diagnostics import read_diagnostics
from sympres.spline import load_spline, preset


def test_spline_build_preset(tmp_path, capsys):
    assert main(["spline", "build", "--preset", "medium", "--output-dir", str(tmp_path)]) == 0
    out = capsys.readouterr().out
    assert "max constraint residual" in out
    residual = float(out.split("max constraint residual ")[1].split()[0])
    assert residual <= 1.0e-10
    assert (tmp_path / "spline_medium.txt").exists()


def test_spline_build_all(tmp_path):
    assert main(["spline", "build", "--all", "--output-dir", str(tmp_path)]) == 0
    assert sorted(p.name for p in tmp_path.iterdir()) == [
        "spline_coarse.txt", "spline_fine.txt", "spline_medium.txt",
    ]


def test_spline_build_infeasible(tmp_path, capsys):
    code = main(["spline", "build", "--nconsist", "13", "--order", "11",
                 "--output-dir", str(tmp_path)])
    assert code == 3
    assert "InfeasibleConstraints" in capsys.readouterr().err


def test_spline_build_round_trip(tmp_path, rng):
    assert main(["spline", "build", "--preset", "fine", "--output-dir", str(tmp_path)]) == 0
    loaded = load_spline(tmp_path / "spline_fine.txt")
    x = rng.uniform(-3.0, 3.0, 100)
    assert np.max(np.abs(loaded(x) - preset("fine")(x))) <= 1.0e-15


def test_spline_spectrum(tmp_path):
    assert main(["spline", "spectrum", "--preset", "coarse", "--output-dir", str(tmp_path)]) == 0
    data = np.loadtxt(tmp_path / "spectrum_coarse.csv", delimiter=",", skiprows=1)
    header = (tmp_path / "spectrum_coarse.csv").read_text().splitlines()[0]
    assert header == "omega_rad_per_cell,dispersion_error"
    assert data.shape == (256, 2)
    assert data[0, 0] == 0.0
    assert data[0, 1] <= 1.0e-12
    assert data[-1, 0] == pytest.approx(np.pi)


def test_verify_passes(capsys):
    assert main(["verify", "--preset", "medium", "--mesh", "uniform", "--n", "20"]) == 0
    assert main(["verify", "--mesh", "sinusoidal", "--amplitude", "0.05", "--n", "20"]) == 0
    out = capsys.readouterr().out
    assert "FAIL" not in out
    assert "2/1" not in out and "1/1 configurations passed" in out


def test_verify_degenerate_mapping(capsys):
    assert main(["verify", "--mesh", "sinusoidal", "--amplitude", "0.2", "--n", "20"]) == 4
    assert "DegenerateMapping" in capsys.readouterr().out


def test_verify_config_sections(tmp_path, capsys):
    cfg = tmp_path / "v.cfg"
    cfg.write_text("n = 10\n[u]\nmesh = uniform\n[s]\nmesh = sinusoidal\npreset = fine\n")
    assert main(["verify", "--config", str(cfg)]) == 0
    assert "2/2 configurations passed" in capsys.readouterr().out


def test_wave_run(tmp_path, capsys):
    args = ["wave", "run", "--n", "10", "--t-end", "2", "--output-dir", str(tmp_path)]
    assert main(args) == 0
    records = read_diagnostics(tmp_path / "diagnostics_medium_uniform_10x10.csv")
    assert [r.t for r in records] == [0.0, 1.0, 2.0]
    assert records[-1].energy_loss_pct <= 1.0e-9


def test_wave_run_check_dt(tmp_path, capsys):
    args = ["wave", "run", "--n", "10", "--t-end", "1", "--output-dir", str(tmp_path),
            "--check-dt"]
    assert main(args) == 0
    assert "PASS halving dt" in capsys.readouterr().out


def test_wave_run_deterministic(tmp_path):
    for sub in ("a", "b"):
        args = ["wave", "run", "--n", "10", "--t-end", "1", "--mesh", "sinusoidal",
                "--output-dir", str(tmp_path / sub)]
        assert main(args) == 0
    name = "diagnostics_medium_sinusoidal_10x10.csv"
    assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_report_empty(tmp_path):
    assert main(["report", "--output-dir", str(tmp_path)]) == 0
    assert (tmp_path / "table2.csv").read_text() == "t\n"
    assert (tmp_path / "table3.csv").read_text() == "t\n"


def test_report_parallel_matches_serial(tmp_path, monkeypatch):
    cfg = tmp_path / "r.cfg"
    cfg.write_text("n = 10\nt_end = 2\n[one]\npreset = coarse\n[two]\nmesh = sinusoidal\n")

    outputs = {}
    for threads in ("1", "2"):
        monkeypatch.setenv("SYMPRES_THREADS", threads)
        out = tmp_path / f"out{threads}"
        assert main(["report", "--config", str(cfg), "--output-dir", str(out)]) == 0
        outputs[threads] = [(out / f).read_bytes() for f in ("table2.csv", "table3.csv")]

    assert outputs["1"] == outputs["2"]
    table2 = outputs["1"][0].decode().splitlines()
    assert table2[0] == "t,coarse_uniform_10x10_rms_pct,medium_sinusoidal_10x10_rms_pct"
    assert len(table2) == 11
    # runs shorter than ten report times leave blanks
    assert table2[3] == "3,,"


def test_bad_thread_count(tmp_path, monkeypatch):
    monkeypatch.setenv("SYMPRES_THREADS", "many")
    assert main(["report", "--output-dir", str(tmp_path)]) == 2


def test_config_errors_exit_2(tmp_path, capsys):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("foo = 1\n")
    assert main(["verify", "--config", str(cfg)]) == 2
    assert main(["verify", "--config", str(tmp_path / "missing.cfg")]) == 2
    assert main(["wave", "run", "--dt", "-1"]) == 2
    with pytest.raises(SystemExit) as exc:
        main(["verify", "--bogus"])
    assert exc.value.code == 2


def test_flags_override_config(tmp_path):
    cfg = tmp_path / "w.cfg"
    cfg.write_text("n = 40\nt_end = 1\n")
    args = ["wave", "run", "--config", str(cfg), "--n", "10", "--output-dir", str(tmp_path)]
    assert main(args) == 0
    assert (tmp_path / "diagnostics_medium_uniform_10x10.csv").exists()
