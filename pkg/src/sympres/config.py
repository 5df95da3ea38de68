"""
Plain-text experiment configuration.

The format is flat ``key = value`` lines. Lines before the first
``[section]`` header set defaults; every section describes one experiment
and inherits those defaults. ``#`` starts a comment. Unknown keys are
rejected.

Example::

    output_dir = out
    t_end = 10

    [medium-uniform]
    preset = medium
    mesh = uniform
    n = 20
"""

from __future__ import annotations

from dataclasses import dataclass, fields, replace
from pathlib import Path
from typing import Dict, List, Optional, Tuple, Union

from sympres.errors import ConfigError
from sympres.grid import DEFAULT_QUAD_POINTS
from sympres.spline import PRESETS, LsqConfig, SplineParams
from sympres.wave import RunConfig

_SPLINE_KEYS = ("n_span", "n_cont", "order", "n_consist", "w_max")


@dataclass(frozen=True)
class ExperimentConfig:
    name: str = "default"
    preset: str = "medium"
    n_span: Optional[int] = None
    n_cont: Optional[int] = None
    order: Optional[int] = None
    n_consist: Optional[int] = None
    w_max: Optional[float] = None
    mesh: str = "uniform"
    n: int = 20
    amplitude: float = 0.05
    dt: float = RunConfig.dt
    t_end: float = 10.0
    report_interval: float = 1.0
    output_dir: str = "."
    quad_points: int = DEFAULT_QUAD_POINTS
    seed: int = 0
    n_omega: int = 64
    n_x: int = 128
    n_spectrum: int = 256

    @property
    def is_custom(self) -> bool:
        return any(getattr(self, k) is not None for k in _SPLINE_KEYS)

    @property
    def spline_name(self) -> str:
        return "custom" if self.is_custom else self.preset

    def spline_params(self) -> SplineParams:
        try:
            base = PRESETS[self.preset]
        except KeyError:
            raise ConfigError(
                f"unknown preset '{self.preset}' (choose from {sorted(PRESETS)})"
            ) from None
        overrides = {k: getattr(self, k) for k in _SPLINE_KEYS if getattr(self, k) is not None}
        return replace(base, **overrides)

    def lsq_config(self) -> LsqConfig:
        return LsqConfig(n_omega=self.n_omega, n_x=self.n_x)

    def run_config(self) -> RunConfig:
        return RunConfig(
            spline=self.spline_params() if self.is_custom else self.preset,
            mesh=self.mesh,
            n=self.n,
            amplitude=self.amplitude,
            t_end=self.t_end,
            dt=self.dt,
            report_interval=self.report_interval,
            quad_points=self.quad_points,
        )

    def validate(self) -> "ExperimentConfig":
        if self.mesh not in ("uniform", "sinusoidal"):
            raise ConfigError(f"mesh must be 'uniform' or 'sinusoidal': '{self.mesh}'")
        if self.preset not in PRESETS:
            raise ConfigError(
                f"unknown preset '{self.preset}' (choose from {sorted(PRESETS)})"
            )
        for key in ("n", "quad_points", "n_omega", "n_x", "n_spectrum"):
            if getattr(self, key) < 1:
                raise ConfigError(f"'{key}' must be positive")
        for key in ("dt", "t_end", "report_interval"):
            if getattr(self, key) <= 0:
                raise ConfigError(f"'{key}' must be positive")
        return self


_FIELDS = {f.name: f for f in fields(ExperimentConfig)}


def _convert(key: str, value: str):
    field = _FIELDS[key]
    kind = field.type if isinstance(field.type, str) else field.type.__name__
    try:
        if "int" in kind:
            return int(value)
        if "float" in kind:
            return float(value)
    except ValueError:
        raise ConfigError(f"invalid value for '{key}': '{value}'") from None
    return value


def coerce(values: Dict[str, str]) -> Dict[str, object]:
    """Convert raw string values to the field types, rejecting unknown keys."""
    out = {}
    for key, value in values.items():
        if key not in _FIELDS or key == "name":
            raise ConfigError(f"unknown configuration key: '{key}'")
        out[key] = _convert(key, value) if isinstance(value, str) else value
    return out


def parse_config(text: str) -> Tuple[ExperimentConfig, List[ExperimentConfig]]:
    """Parse configuration text into the defaults and the per-section experiments."""
    defaults: Dict[str, str] = {}
    sections: List[Tuple[str, Dict[str, str]]] = []
    current = defaults

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("[") and line.endswith("]"):
            name = line[1:-1].strip()
            if not name:
                raise ConfigError(f"line {lineno}: empty section name")
            if any(name == n for n, _ in sections):
                raise ConfigError(f"line {lineno}: duplicate section '{name}'")
            current = {}
            sections.append((name, current))
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got '{raw}'")
        key, value = (s.strip() for s in line.split("=", 1))
        if key in current:
            raise ConfigError(f"line {lineno}: duplicate key '{key}'")
        current[key] = value

    base = ExperimentConfig(**coerce(defaults)).validate()
    experiments = [
        replace(base, name=name, **coerce(values)).validate() for name, values in sections
    ]
    return base, experiments


def load_config(
    path: Union[str, Path, None]
) -> Tuple[ExperimentConfig, List[ExperimentConfig]]:
    if path is None:
        return ExperimentConfig(), []
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config '{path}': {exc}") from None
    return parse_config(text)
