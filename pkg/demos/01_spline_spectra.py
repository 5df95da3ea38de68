"""
Interpolation splines and their dispersion error
================================================

Build the three preset base functions, check that they reproduce low-order
polynomials, and print how well they interpolate a complex exponential
:math:`e^{i \\omega x}` as a function of the grid wavenumber.
"""

import numpy as np

from sympres.spline import PRESETS, constraint_residuals, dispersion_curve, preset

splines = {name: preset(name) for name in PRESETS}

# every constraint family holds to round-off
for name, spline in splines.items():
    worst = max(constraint_residuals(spline).values())
    print(f"{name:>6}: {spline.params}  max constraint residual {worst:.1e}")

# the base function is even and vanishes at the end of its support
w0 = splines["medium"]
x = np.linspace(-3, 3, 7)
print("\nw0 at the knots:", np.round(w0(x), 6))

# dispersion error over the resolved part of the spectrum
omega = np.array([0.05, 0.1, 0.2, 0.28, 0.4, 0.6]) * np.pi
print("\nomega/pi " + "".join(f"{w / np.pi:>10.2f}" for w in omega))
for name, spline in splines.items():
    err = dispersion_curve(spline, omega)
    print(f"{name:>8} " + "".join(f"{e:>10.1e}" for e in err))

# small-wavenumber slopes: 3 for n_consist = 3, 4 for n_consist = 4
small = np.geomspace(0.02, 0.05, 8)
for name, spline in splines.items():
    slope = np.polyfit(np.log(small), np.log(dispersion_curve(spline, small)), 1)[0]
    print(f"{name}: log-log slope {slope:.2f}")
