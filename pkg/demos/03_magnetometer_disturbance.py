"""Why a disturbed magnetometer corrupts roll/pitch, and how TRIAD fixes it.

The magnetic field direction is tilted inside the gravity/field plane (a
pure inclination error, the worst case for roll/pitch).  The plain
two-vector filter converges to an orientation *between* what the
accelerometer and the magnetometer each claim, with a residual that cannot
shrink.  Feeding the magnetic slot with the third TRIAD column instead-
which discards exactly the disturbed component-restores the true attitude
and drives the residual to zero.

Run: python demos/03_magnetometer_disturbance.py
"""

import numpy as np

from manifold_ahrs import (
    Measurement,
    NoiseParams,
    ReferenceVectors,
    axis_angle,
    init_state,
    rotation_error,
    step,
)
from manifold_ahrs.quat import conjugate, euler_zyx, identity_quat, quat_product, rotate_vector

refs = ReferenceVectors.make((0.0, 0.0, -1.0), (0.8775, 0.0, -0.4795))

TILT_DEG = 30.0
m_disturbed = rotate_vector(axis_angle(np.array([0.0, 1.0, 0.0]), np.radians(TILT_DEG)), refs.m_r)
print(f"True attitude: identity.  Magnetometer tilted {TILT_DEG:g} deg in the pitch plane.\n")

settings = [
    ("ekf2, R_m = R_a = 0.01", "ekf2", NoiseParams.from_scalars()),
    ("ekf2, R_m = 0.05 > R_a", "ekf2", NoiseParams.from_scalars(r_m=0.05)),
    ("ekf2-triad", "ekf2-triad", NoiseParams.from_scalars()),
]

print(f"{'estimator':<24} {'rot err [deg]':>14} {'pitch err [deg]':>16} {'residual':>10}")
for label, mode, noise in settings:
    state = init_state("mrp", identity_quat(), np.zeros(3), 0.1 * np.eye(6))
    for k in range(3000):
        meas = Measurement(t=k * 0.002, gyro=np.zeros(3), accel=refs.a_r, mag=m_disturbed)
        state, diag = step(state, meas, refs, noise, mode)
    err = np.degrees(rotation_error(identity_quat(), state.qbar))
    _, pitch, _ = euler_zyx(quat_product(conjugate(state.qbar), identity_quat()))
    print(f"{label:<24} {err:>14.3f} {np.degrees(abs(pitch)):>16.3f} {diag.residual_norm:>10.2e}")

print()
print("With equal trust the filter splits the 30-degree inconsistency in half;")
print("raising R_m shifts the balance toward the accelerometer (30/6 = 5 deg);")
print("the TRIAD aid removes the disturbed component entirely.")
