"""Unit-quaternion and 3-vector algebra used by every other module.

Quaternions are stored scalar-first, ``q = (q0, q1, q2, q3)``, using the
Hamilton convention (``ijk = -1``).  ``q`` and ``-q`` encode the same
rotation; operations that compare rotations account for the double cover.
The rotation matrix ``R(q)`` maps body-frame vectors into the global frame,
so a body-frame sensor observing a global reference vector ``v`` reads
``R(q).T @ v``.
"""

from __future__ import annotations

import numpy as np
from numpy.typing import ArrayLike, NDArray

# Unit-norm drift tolerated after any constructor or product.
UNIT_TOL = 1e-9


def as_vec3(v: ArrayLike) -> NDArray[np.float64]:
    """Validate and return ``v`` as a finite float array of shape (3,)."""
    arr = np.asarray(v, dtype=float)
    if arr.shape != (3,):
        raise ValueError(f"expected a 3-vector, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"non-finite 3-vector: {arr}")
    return arr


def identity_quat() -> NDArray[np.float64]:
    """Return the identity quaternion (1, 0, 0, 0)."""
    return np.array([1.0, 0.0, 0.0, 0.0])


def normalize_quat(q: ArrayLike) -> NDArray[np.float64]:
    """Normalize a length-4 array to a unit quaternion.

    Raises
    ------
    ValueError
        If the input has the wrong shape, contains non-finite entries, or
        has a norm too small to define a direction.
    """
    arr = np.asarray(q, dtype=float)
    if arr.shape != (4,):
        raise ValueError(f"expected a length-4 quaternion, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"non-finite quaternion: {arr}")
    norm = np.sqrt(arr @ arr)
    if norm < 1e-12:
        raise ValueError("quaternion norm too small to normalize")
    return arr / norm


def quat_product(a: ArrayLike, b: ArrayLike) -> NDArray[np.float64]:
    """Hamilton product ``a * b``, renormalized.

    Composition follows rotation-matrix order: ``R(a * b) = R(a) @ R(b)``.
    """
    w1, x1, y1, z1 = np.asarray(a, dtype=float)
    w2, x2, y2, z2 = np.asarray(b, dtype=float)
    out = np.empty(4)
    out[0] = w1 * w2 - x1 * x2 - y1 * y2 - z1 * z2
    out[1] = w1 * x2 + x1 * w2 + y1 * z2 - z1 * y2
    out[2] = w1 * y2 - x1 * z2 + y1 * w2 + z1 * x2
    out[3] = w1 * z2 + x1 * y2 - y1 * x2 + z1 * w2
    # Renormalize: long filter runs accumulate rounding drift otherwise.
    return out / np.sqrt(out @ out)


def conjugate(q: ArrayLike) -> NDArray[np.float64]:
    """Conjugate quaternion: scalar part kept, vector part negated."""
    q = np.asarray(q, dtype=float)
    return np.array([q[0], -q[1], -q[2], -q[3]])


def rotate_vector(q: ArrayLike, v: ArrayLike) -> NDArray[np.float64]:
    """Rotate ``v`` by ``q`` via the sandwich product ``q * (0, v) * q^*``."""
    q = np.asarray(q, dtype=float)
    v = np.asarray(v, dtype=float)
    qv = q[1:]
    t = 2.0 * np.cross(qv, v)
    return v + q[0] * t + np.cross(qv, t)


def to_rotation_matrix(q: ArrayLike) -> NDArray[np.float64]:
    """Rotation matrix of ``q``, satisfying ``R @ v = (q * (0,v) * q^*)_vec``."""
    w, x, y, z = np.asarray(q, dtype=float)
    xx, yy, zz = x * x, y * y, z * z
    wx, wy, wz = w * x, w * y, w * z
    xy, xz, yz = x * y, x * z, y * z
    R = np.empty((3, 3))
    R[0, 0] = 1.0 - 2.0 * (yy + zz)
    R[0, 1] = 2.0 * (xy - wz)
    R[0, 2] = 2.0 * (xz + wy)
    R[1, 0] = 2.0 * (xy + wz)
    R[1, 1] = 1.0 - 2.0 * (xx + zz)
    R[1, 2] = 2.0 * (yz - wx)
    R[2, 0] = 2.0 * (xz - wy)
    R[2, 1] = 2.0 * (yz + wx)
    R[2, 2] = 1.0 - 2.0 * (xx + yy)
    return R


def rotation_error(qbar: ArrayLike, q: ArrayLike) -> float:
    """Angle in radians between two orientations, in [0, pi].

    This is ``2 * arccos(|qbar . q|)``, with the absolute value folding the
    quaternion double cover (``q`` and ``-q`` are the same rotation).  It is
    evaluated through the deviation quaternion as
    ``2 * atan2(|vec(qbar^* * q)|, |(qbar^* * q)_0|)``, the same quantity in
    a form that keeps full precision near zero, where arccos of a clamped
    dot product loses half the significant digits.
    """
    w1, x1, y1, z1 = np.asarray(qbar, dtype=float)
    w2, x2, y2, z2 = np.asarray(q, dtype=float)
    # Deviation qbar^* * q (no renormalization; inputs are unit).
    d0 = w1 * w2 + x1 * x2 + y1 * y2 + z1 * z2
    dx = w1 * x2 - x1 * w2 - y1 * z2 + z1 * y2
    dy = w1 * y2 + x1 * z2 - y1 * w2 - z1 * x2
    dz = w1 * z2 - x1 * y2 + y1 * x2 - z1 * w2
    return 2.0 * float(np.arctan2(np.sqrt(dx * dx + dy * dy + dz * dz), abs(d0)))


def axis_angle(axis: ArrayLike, angle: float) -> NDArray[np.float64]:
    """Unit quaternion for a rotation of ``angle`` radians about a unit axis.

    Raises
    ------
    ValueError
        If ``axis`` is not unit-norm within 1e-9.
    """
    axis = as_vec3(axis)
    norm = np.sqrt(axis @ axis)
    if abs(norm - 1.0) > UNIT_TOL:
        raise ValueError(f"axis must be unit-norm, got |axis| = {norm!r}")
    half = 0.5 * float(angle)
    out = np.empty(4)
    out[0] = np.cos(half)
    out[1:] = np.sin(half) * axis
    return out


def euler_zyx(q: ArrayLike) -> tuple[float, float, float]:
    """Intrinsic Z-Y-X (yaw, pitch, roll) Euler angles of ``q``, in radians.

    ``R(q) = Rz(yaw) @ Ry(pitch) @ Rx(roll)``, the aeronautic convention
    matching a North-East-Down global frame.
    """
    R = to_rotation_matrix(q)
    pitch = float(np.arcsin(np.clip(-R[2, 0], -1.0, 1.0)))
    yaw = float(np.arctan2(R[1, 0], R[0, 0]))
    roll = float(np.arctan2(R[2, 1], R[2, 2]))
    return yaw, pitch, roll


def angle_between(u: ArrayLike, v: ArrayLike) -> float:
    """Angle in radians between two nonzero 3-vectors."""
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    nu = np.sqrt(u @ u)
    nv = np.sqrt(v @ v)
    if nu < 1e-15 or nv < 1e-15:
        raise ValueError("cannot measure the angle of a zero vector")
    return float(np.arccos(np.clip((u @ v) / (nu * nv), -1.0, 1.0)))


def cross_matrix(v: ArrayLike) -> NDArray[np.float64]:
    """Skew-symmetric matrix ``[v]x`` with ``[v]x @ u = v x u``."""
    v = np.asarray(v, dtype=float)
    return np.array(
        [
            [0.0, -v[2], v[1]],
            [v[2], 0.0, -v[0]],
            [-v[1], v[0], 0.0],
        ]
    )
