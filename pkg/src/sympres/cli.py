"""
Command-line interface.

Subcommands::

    sympres spline build     build presets or a custom spline and save it
    sympres spline spectrum  write dispersion_error over [0, pi] as CSV
    sympres verify           run the operator invariant checks
    sympres wave run         run one wave experiment, write diagnostics CSV
    sympres report           run experiments and write table2.csv, table3.csv

Exit codes: 0 success, 2 configuration error, 3 numerical failure
(infeasible spline or unstable run), 4 verification failure.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from sympres.checks import operator_checks
from sympres.config import ExperimentConfig, coerce, load_config
from sympres.diagnostics import (
    DiagnosticsRecord,
    build_report,
    write_diagnostics,
)
from sympres.errors import (
    ConfigError,
    DegenerateMapping,
    InfeasibleConstraints,
    NonPositiveWeight,
    UnstableRun,
)
from sympres.grid import make_grid
from sympres.spline import (
    PRESETS,
    build_spline,
    constraint_residuals,
    dispersion_curve,
    save_spline,
)
from sympres.wave import run

logger = logging.getLogger("sympres")

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3
EXIT_VERIFY = 4

MATRIX_SPLINES = ("coarse", "medium", "fine")
MATRIX_SIZES = (20, 40, 80)
MATRIX_MESHES = ("uniform", "sinusoidal")


# {{{ helpers


def _thread_cap() -> int:
    value = os.environ.get("SYMPRES_THREADS", "1")
    try:
        return max(1, int(value))
    except ValueError:
        raise ConfigError(f"SYMPRES_THREADS must be an integer: '{value}'") from None


# flag -> config key
_FLAGS = {
    "preset": "preset",
    "nspan": "n_span",
    "ncont": "n_cont",
    "order": "order",
    "nconsist": "n_consist",
    "wmax": "w_max",
    "mesh": "mesh",
    "n": "n",
    "amplitude": "amplitude",
    "dt": "dt",
    "t_end": "t_end",
    "output_dir": "output_dir",
    "quad_points": "quad_points",
    "seed": "seed",
}


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="key = value configuration file")
    parser.add_argument("--preset", help="spline preset (coarse, medium, fine)")
    parser.add_argument("--nspan", type=int)
    parser.add_argument("--ncont", type=int)
    parser.add_argument("--order", type=int)
    parser.add_argument("--nconsist", type=int)
    parser.add_argument("--wmax", type=float)
    parser.add_argument("--mesh", choices=("uniform", "sinusoidal"))
    parser.add_argument("--n", type=int, help="points per direction")
    parser.add_argument("--amplitude", type=float)
    parser.add_argument("--dt", type=float)
    parser.add_argument("--t-end", dest="t_end", type=float)
    parser.add_argument("--output-dir", dest="output_dir")
    parser.add_argument("--quad-points", dest="quad_points", type=int)
    parser.add_argument("--seed", type=int)


def _overrides(args: argparse.Namespace) -> Dict[str, object]:
    return {
        key: getattr(args, flag)
        for flag, key in _FLAGS.items()
        if getattr(args, flag, None) is not None
    }


def _experiments(
    args: argparse.Namespace,
) -> Tuple[ExperimentConfig, List[ExperimentConfig]]:
    base, sections = load_config(args.config)
    overrides = coerce(_overrides(args))
    base = replace(base, **overrides).validate()
    sections = [replace(s, **overrides).validate() for s in sections]
    return base, sections


def _output_dir(cfg: ExperimentConfig) -> Path:
    path = Path(cfg.output_dir)
    path.mkdir(parents=True, exist_ok=True)
    return path


# }}}


# {{{ spline


def cmd_spline_build(args: argparse.Namespace) -> int:
    base, _ = _experiments(args)
    out = _output_dir(base)

    if args.all:
        configs = [replace(base, preset=name) for name in PRESETS]
    else:
        configs = [base]

    worst = 0.0
    for cfg in configs:
        spline = build_spline(cfg.spline_params(), cfg.lsq_config())
        path = out / f"spline_{cfg.spline_name}.txt"
        save_spline(spline, path)

        residuals = constraint_residuals(spline)
        worst = max(worst, max(residuals.values()))
        details = ", ".join(f"{k}={v:.2e}" for k, v in residuals.items())
        print(f"{cfg.spline_name}: wrote {path}; max constraint residual "
              f"{spline.constraint_residual:.3e} ({details})")

    return EXIT_OK if worst <= 1.0e-10 else EXIT_VERIFY


def cmd_spline_spectrum(args: argparse.Namespace) -> int:
    base, _ = _experiments(args)
    out = _output_dir(base)

    spline = build_spline(base.spline_params(), base.lsq_config())
    omega = np.linspace(0.0, np.pi, base.n_spectrum)
    error = dispersion_curve(spline, omega)

    path = out / f"spectrum_{base.spline_name}.csv"
    lines = ["omega_rad_per_cell,dispersion_error"]
    lines += [f"{float(w)!r},{float(e)!r}" for w, e in zip(omega, error)]
    path.write_text("\n".join(lines) + "\n")
    print(f"{base.spline_name}: wrote {path}")
    return EXIT_OK


# }}}


# {{{ verify


def _verify_one(cfg: ExperimentConfig) -> bool:
    label = f"{cfg.spline_name}/{cfg.mesh}/{cfg.n}x{cfg.n}"
    try:
        spline = build_spline(cfg.spline_params(), cfg.lsq_config())
        grid = make_grid(
            cfg.mesh, (cfg.n, cfg.n), amplitude=cfg.amplitude, quad_points=cfg.quad_points
        )
        results = operator_checks(grid, spline, seed=cfg.seed)
    except (DegenerateMapping, NonPositiveWeight) as exc:
        print(f"FAIL {label}: {type(exc).__name__}: {exc}")
        return False

    ok = all(r.passed for r in results)
    print(f"{'PASS' if ok else 'FAIL'} {label}")
    for r in results:
        print(f"    {r}")
    return ok


def cmd_verify(args: argparse.Namespace) -> int:
    base, sections = _experiments(args)
    if args.matrix:
        configs = [
            replace(base, preset=p, mesh=m, n=n)
            for m in MATRIX_MESHES for n in (10, 20) for p in MATRIX_SPLINES
        ]
    else:
        configs = sections or [base]

    results = [_verify_one(cfg) for cfg in configs]
    n_fail = results.count(False)
    print(f"{len(results) - n_fail}/{len(results)} configurations passed")
    return EXIT_OK if n_fail == 0 else EXIT_VERIFY


# }}}


# {{{ wave / report


def _run_label(cfg: ExperimentConfig) -> str:
    return f"{cfg.spline_name}_{cfg.mesh}_{cfg.n}x{cfg.n}"


def _run_experiment(cfg: ExperimentConfig) -> Tuple[str, List[DiagnosticsRecord]]:
    snapshots = run(cfg.run_config())
    records = [s.record for s in snapshots]

    path = _output_dir(cfg) / f"diagnostics_{_run_label(cfg)}.csv"
    write_diagnostics(records, path)
    return _run_label(cfg), records


def cmd_wave_run(args: argparse.Namespace) -> int:
    base, _ = _experiments(args)
    label, records = _run_experiment(base)
    print(f"{label}: wrote {_output_dir(base) / f'diagnostics_{label}.csv'}")
    last = records[-1]
    print(f"    t={last.t:g} rms={last.rms_error_pct:.4g}% "
          f"mass loss={last.mass_loss_pct:.1E}% energy loss={last.energy_loss_pct:.1E}%")

    if args.check_dt:
        half = replace(base, dt=base.dt / 2.0)
        half_records = [s.record for s in run(half.run_config())]
        ref = half_records[-1].rms_error_pct
        change = abs(last.rms_error_pct - ref) / ref if ref > 0 else 0.0
        ok = change < 0.01
        print(f"{'PASS' if ok else 'FAIL'} halving dt changes final rms by "
              f"{100 * change:.3g}% (tol 1%)")
        if not ok:
            return EXIT_VERIFY
    return EXIT_OK


def cmd_report(args: argparse.Namespace) -> int:
    base, sections = _experiments(args)
    if args.matrix:
        configs = [
            replace(base, preset=p, mesh=m, n=n, name=f"{p}_{m}_{n}")
            for m in MATRIX_MESHES for p in MATRIX_SPLINES for n in MATRIX_SIZES
        ]
    else:
        configs = sections

    workers = min(_thread_cap(), max(1, len(configs)))
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_run_experiment, configs))
    else:
        results = [_run_experiment(cfg) for cfg in configs]

    runs = dict(results)
    errors, losses = build_report(runs)
    out = _output_dir(base)
    errors.to_csv(out / "table2.csv")
    losses.to_csv(out / "table3.csv")
    print(f"wrote {out / 'table2.csv'} and {out / 'table3.csv'} ({len(runs)} runs)")
    return EXIT_OK


# }}}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sympres",
        description="Symmetry-preserving discretization on periodic curvilinear grids.",
    )
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    spline = sub.add_parser("spline", help="interpolation splines")
    spline_sub = spline.add_subparsers(dest="spline_command", required=True)
    build = spline_sub.add_parser("build", help="build and save splines")
    _add_common(build)
    build.add_argument("--all", action="store_true", help="build all presets")
    build.set_defaults(func=cmd_spline_build)

    spectrum = spline_sub.add_parser("spectrum", help="dispersion error curve")
    _add_common(spectrum)
    spectrum.set_defaults(func=cmd_spline_spectrum)

    verify = sub.add_parser("verify", help="operator invariant checks")
    _add_common(verify)
    verify.add_argument(
        "--matrix", action="store_true",
        help="all presets on {uniform, sinusoidal} x {10, 20}",
    )
    verify.set_defaults(func=cmd_verify)

    wave = sub.add_parser("wave", help="wave-equation experiments")
    wave_sub = wave.add_subparsers(dest="wave_command", required=True)
    wave_run = wave_sub.add_parser("run", help="run one experiment")
    _add_common(wave_run)
    wave_run.add_argument(
        "--check-dt", action="store_true",
        help="rerun with dt/2 and require < 1%% change in the final rms error",
    )
    wave_run.set_defaults(func=cmd_wave_run)

    report = sub.add_parser("report", help="write table2.csv and table3.csv")
    _add_common(report)
    report.add_argument(
        "--matrix", action="store_true",
        help="run all presets x {20, 40, 80} x {uniform, sinusoidal}",
    )
    report.set_defaults(func=cmd_report)

    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )

    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (InfeasibleConstraints, UnstableRun, NonPositiveWeight, DegenerateMapping) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
