"""
Conserved quantities, error norms and report tables.

All quantities use the discrete inner product :math:`\\langle x, y\\rangle_Q
= \\sum_i x_i Q_i y_i`: mass is :math:`\\langle 1, p \\rangle_Q`, energy is
:math:`\\frac12 \\langle q, q \\rangle_Q - \\frac12 \\langle p, A p\\rangle_Q`
and the relative RMS error is Q-weighted.

.. autoclass:: DiagnosticsRecord
.. autoclass:: ReportTable

.. autofunction:: mass
.. autofunction:: energy
.. autofunction:: rms_error
.. autofunction:: build_report
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from pathlib import Path
from typing import TYPE_CHECKING, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from sympres.errors import ZeroReference

if TYPE_CHECKING:
    from sympres.operators import DiscreteOperator, IntegrationWeights
    from sympres.wave import WaveState


DIAGNOSTICS_HEADER = (
    "t", "rms_error_pct", "mass", "mass_loss_pct", "energy", "energy_loss_pct",
)


def mass(p: np.ndarray, weights: "IntegrationWeights") -> float:
    return float(np.sum(weights.Q * p))


def energy(
    state: "WaveState", operator: "DiscreteOperator", weights: "IntegrationWeights"
) -> float:
    """Discrete energy, computed with the symmetric stiffness :math:`K = -QA`."""
    kinetic = 0.5 * float(np.sum(weights.Q * state.q**2))
    potential = 0.5 * float(state.p @ (operator.stiffness @ state.p))
    return kinetic + potential


def rms_error(p: np.ndarray, p_ref: np.ndarray, weights: "IntegrationWeights") -> float:
    """Relative Q-weighted RMS error in percent.

    :raises ZeroReference: if the reference has zero norm.
    """
    ref = float(np.sum(weights.Q * p_ref**2))
    if ref <= 0.0:
        raise ZeroReference("reference field has zero Q-norm")
    err = float(np.sum(weights.Q * (p - p_ref) ** 2))
    return 100.0 * np.sqrt(err / ref)


def loss_pct(value: float, initial: float) -> float:
    """``100 |X(t) - X(0)| / |X(0)|``; absolute change when ``X(0) == 0``."""
    if initial == 0.0:
        return 100.0 * abs(value)
    return 100.0 * abs(value - initial) / abs(initial)


@dataclass(frozen=True)
class DiagnosticsRecord:
    t: float
    mass: float
    energy: float
    rms_error_pct: float
    mass_loss_pct: float = 0.0
    energy_loss_pct: float = 0.0

    def as_row(self) -> Tuple[float, ...]:
        return (
            self.t, self.rms_error_pct, self.mass,
            self.mass_loss_pct, self.energy, self.energy_loss_pct,
        )


def make_record(
    state: "WaveState",
    p_ref: np.ndarray,
    operator: "DiscreteOperator",
    weights: "IntegrationWeights",
    initial: Optional[DiagnosticsRecord] = None,
) -> DiagnosticsRecord:
    m = mass(state.p, weights)
    e = energy(state, operator, weights)
    return DiagnosticsRecord(
        t=state.t,
        mass=m,
        energy=e,
        rms_error_pct=rms_error(state.p, p_ref, weights),
        mass_loss_pct=0.0 if initial is None else loss_pct(m, initial.mass),
        energy_loss_pct=0.0 if initial is None else loss_pct(e, initial.energy),
    )


# {{{ csv


def _format(value: float) -> str:
    return repr(float(value))


def format_loss(value: float) -> str:
    """Two significant digits in scientific notation, e.g. ``3.5E-08``."""
    return f"{value:.1E}"


def write_diagnostics(
    records: Sequence[DiagnosticsRecord], path: Union[str, Path, None] = None
) -> str:
    """Write the diagnostics stream as CSV; returns the CSV text."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(DIAGNOSTICS_HEADER)
    for r in records:
        writer.writerow([_format(v) for v in r.as_row()])

    text = buf.getvalue()
    if path is not None:
        Path(path).write_text(text)
    return text


def read_diagnostics(path: Union[str, Path]) -> List[DiagnosticsRecord]:
    with open(path, newline="") as fd:
        reader = csv.DictReader(fd)
        missing = set(DIAGNOSTICS_HEADER) - set(reader.fieldnames or ())
        if missing:
            raise ValueError(f"'{path}' is missing columns: {sorted(missing)}")
        return [
            DiagnosticsRecord(**{k: float(row[k]) for k in DIAGNOSTICS_HEADER})
            for row in reader
        ]


# }}}


# {{{ report


@dataclass
class ReportTable:
    """A table with one row per report time and labelled columns."""

    header: List[str]
    rows: List[List[str]] = field(default_factory=list)

    def to_csv(self, path: Union[str, Path, None] = None) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(self.header)
        writer.writerows(self.rows)

        text = buf.getvalue()
        if path is not None:
            Path(path).write_text(text)
        return text


def build_report(
    runs: Dict[str, Sequence[DiagnosticsRecord]],
    times: Sequence[float] = tuple(range(1, 11)),
) -> Tuple[ReportTable, ReportTable]:
    """Assemble the error table and the conservation table.

    :arg runs: diagnostics series keyed by a run label such as
        ``"medium_uniform_20x20"``; columns follow the key order.
    :returns: ``(errors, losses)``. The first has one ``<label>_rms_pct``
        column per run, the second a ``<label>_mass_loss_pct`` and
        ``<label>_energy_loss_pct`` pair. Rows are the requested *times*;
        runs that did not reach a time leave the cell empty.
    """
    labels = list(runs)
    errors = ReportTable(["t"] + [f"{lb}_rms_pct" for lb in labels])
    losses = ReportTable(
        ["t"]
        + [c for lb in labels for c in (f"{lb}_mass_loss_pct", f"{lb}_energy_loss_pct")]
    )
    if not labels:
        return errors, losses

    lookup = {
        lb: {round(r.t, 9): r for r in records} for lb, records in runs.items()
    }
    for t in times:
        key = round(float(t), 9)
        err_row = [f"{t:g}"]
        loss_row = [f"{t:g}"]
        for lb in labels:
            rec = lookup[lb].get(key)
            if rec is None:
                err_row.append("")
                loss_row.extend(["", ""])
            else:
                err_row.append(f"{rec.rms_error_pct:.4g}")
                loss_row.extend(
                    [format_loss(rec.mass_loss_pct), format_loss(rec.energy_loss_pct)]
                )
        errors.rows.append(err_row)
        losses.rows.append(loss_row)

    return errors, losses


# }}}
