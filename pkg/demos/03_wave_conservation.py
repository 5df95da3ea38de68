"""
A traveling Gaussian on the periodic unit square
================================================

Run the semi-discrete wave equation p'' = A p with RK4 on a uniform and a
curvilinear 20x20 grid. Mass and energy stay at round-off level while the
RMS error grows with the dispersion of the coarse grid.

Takes about 15 seconds.
"""

from sympres.diagnostics import build_report
from sympres.wave import RunConfig, run

runs = {}
for mesh in ("uniform", "sinusoidal"):
    config = RunConfig(spline="medium", mesh=mesh, n=20, t_end=10.0)
    runs[config.label] = [snap.record for snap in run(config)]

errors, losses = build_report(runs)
print("relative RMS error in percent")
print(errors.to_csv())
print("mass and energy change in percent")
print(losses.to_csv())

first = next(iter(runs.values()))
print(f"t=10: energy {first[-1].energy:.12f} vs t=0: {first[0].energy:.12f}")
