"""Tour of the four attitude-deviation charts.

Shows how each chart maps the same deviation, that they all agree to first
order near the identity, and how their distortion and image sizes differ at
large angles.

Run: python demos/01_charts_tour.py
"""

import numpy as np

from manifold_ahrs import CHART_KINDS, axis_angle, chart_forward, chart_inverse, rotation_error, saturate

AXIS = np.array([0.0, 0.0, 1.0])

print("Chart coordinates of a deviation about z, by angle:")
print(f"{'angle':>8} " + "".join(f"{k:>18}" for k in CHART_KINDS))
for deg in (0.1, 1.0, 10.0, 45.0, 90.0, 150.0, 179.0):
    delta = axis_angle(AXIS, np.radians(deg))
    cells = []
    for kind in CHART_KINDS:
        e = chart_forward(kind, delta)
        cells.append(f"{e[2]:>18.6f}")
    print(f"{deg:>7.1f}° " + "".join(cells))

print()
print("Near the identity every chart is the rotation angle itself (first-order")
print("agreement is what lets the filter share one measurement Jacobian):")
theta = 1e-3
for kind in CHART_KINDS:
    e = chart_forward(kind, axis_angle(AXIS, theta))
    print(f"  {kind:>16}: e_z = {e[2]:.12f}  (theta = {theta})")

print()
print("Round-trip accuracy at 120 degrees:")
delta = axis_angle(AXIS, np.radians(120.0))
for kind in CHART_KINDS:
    if kind == "orthographic":
        print(f"  {kind:>16}: image only covers deviations up to 90°")
        continue
    back = chart_inverse(kind, chart_forward(kind, delta))
    print(f"  {kind:>16}: error = {rotation_error(back, delta):.2e} rad")

print()
print("Saturation pulls Kalman updates back into each chart's image:")
wild = np.array([5.0, 0.0, 0.0])
for kind in CHART_KINDS:
    e = saturate(kind, wild)
    print(f"  {kind:>16}: |e| {np.linalg.norm(wild):.2f} -> {np.linalg.norm(e):.6f}")
