"""Synthetic magneto-inertial sensor generation.

Ground-truth trajectories are hold/slew sequences sampled on a uniform
grid; measurements are produced by applying the sensor models in the
forward direction with additive Gaussian noise, body-frame magnetic
distortion (hard/soft iron) and an optional sinusoidal accelerometer
vibration.  Everything is deterministic given the seed.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from numpy.typing import ArrayLike, NDArray

from .mekf import Measurement, ReferenceVectors
from .quat import (
    as_vec3,
    axis_angle,
    conjugate,
    identity_quat,
    normalize_quat,
    quat_product,
    rotation_error,
)

# A slew must land on its target within this angle or the segment is
# rejected as inconsistent.
_SLEW_CONSISTENCY_TOL = 1e-6


@dataclass(frozen=True)
class TrajectorySegment:
    """One piece of a trajectory: hold an orientation or slew to one.

    For slews, ``rate * duration`` must equal the rotation angle from the
    previous segment's end to ``target`` about ``axis`` (body frame); this
    is validated by `generate_trajectory`.
    """

    kind: str  # "hold" | "slew"
    target: NDArray[np.float64]
    duration: float
    axis: Optional[NDArray[np.float64]] = None
    rate: Optional[float] = None

    def __post_init__(self):
        if self.kind not in ("hold", "slew"):
            raise ValueError(f"segment kind must be 'hold' or 'slew', got {self.kind!r}")
        object.__setattr__(self, "target", normalize_quat(self.target))
        if self.duration <= 0.0:
            raise ValueError(f"segment duration must be positive, got {self.duration!r}")
        if self.kind == "slew":
            if self.axis is None or self.rate is None:
                raise ValueError("slew segments need an axis and a rate")
            object.__setattr__(self, "axis", as_vec3(self.axis))


def hold(target: ArrayLike, duration: float) -> TrajectorySegment:
    """Hold ``target`` for ``duration`` seconds."""
    return TrajectorySegment(kind="hold", target=np.asarray(target, dtype=float), duration=duration)


def slew(
    q_from: ArrayLike,
    q_to: ArrayLike,
    rate: Optional[float] = None,
    duration: Optional[float] = None,
) -> TrajectorySegment:
    """Constant-rate slew from ``q_from`` to ``q_to`` about the short arc.

    Exactly one of ``rate`` (rad/s) or ``duration`` (s) must be given; the
    other is derived from the rotation angle between the endpoints.
    """
    if (rate is None) == (duration is None):
        raise ValueError("give exactly one of rate or duration for a slew")
    q_from = normalize_quat(q_from)
    q_to = normalize_quat(q_to)
    delta = quat_product(conjugate(q_from), q_to)
    if delta[0] < 0.0:
        delta = -delta
    angle = 2.0 * float(np.arccos(min(delta[0], 1.0)))
    if angle < 1e-12:
        raise ValueError("slew endpoints coincide; use a hold instead")
    dv = delta[1:]
    axis = dv / np.sqrt(dv @ dv)
    if rate is None:
        rate = angle / duration
    else:
        duration = angle / rate
    return TrajectorySegment(kind="slew", target=q_to, duration=duration, axis=axis, rate=rate)


@dataclass(frozen=True)
class Vibration:
    """Sinusoid added to the accelerometer before normalization."""

    amplitude: float
    freq_hz: float

    def __post_init__(self):
        if self.amplitude < 0.0 or self.freq_hz < 0.0:
            raise ValueError("vibration amplitude and frequency must be nonnegative")


# Vibration direction: fixed in the body frame, with components off the
# gravity axis so the disturbance survives normalization.
_VIBRATION_DIR = np.array([1.0, 1.0, 1.0]) / np.sqrt(3.0)


@dataclass(frozen=True)
class DisturbanceModel:
    """Sensor noise and magnetic/vibration disturbance to inject.

    ``hard_iron`` (additive body-frame offset, normalized-field units) and
    ``soft_iron`` (multiplicative distortion) act on the magnetometer; the
    noise standard deviations are per axis.  ``schedule`` is an optional
    piecewise-constant gain ``[(t_start_s, scale), ...]`` applied to the
    deterministic disturbances (hard iron and vibration amplitude), used to
    step the disturbance level through a run the way motor RPM sweeps do.
    """

    hard_iron: NDArray[np.float64] = field(default_factory=lambda: np.zeros(3))
    soft_iron: NDArray[np.float64] = field(default_factory=lambda: np.eye(3))
    mag_noise_std: float = 0.0
    accel_noise_std: float = 0.0
    gyro_noise_std: float = 0.0
    vibration: Optional[Vibration] = None
    schedule: Optional[tuple[tuple[float, float], ...]] = None

    def __post_init__(self):
        object.__setattr__(self, "hard_iron", as_vec3(self.hard_iron))
        soft = np.asarray(self.soft_iron, dtype=float)
        if soft.shape != (3, 3):
            raise ValueError(f"soft_iron must be 3x3, got shape {soft.shape}")
        if abs(np.linalg.det(soft)) < 1e-9:
            raise ValueError("soft_iron matrix must be invertible")
        object.__setattr__(self, "soft_iron", soft)
        for name in ("mag_noise_std", "accel_noise_std", "gyro_noise_std"):
            if getattr(self, name) < 0.0:
                raise ValueError(f"{name} must be nonnegative")
        if self.schedule is not None:
            sched = tuple((float(t), float(s)) for t, s in self.schedule)
            times = [t for t, _ in sched]
            if sorted(times) != times:
                raise ValueError("schedule times must be ascending")
            object.__setattr__(self, "schedule", sched)

    def scale_at(self, t: NDArray[np.float64]) -> NDArray[np.float64]:
        """Disturbance gain per sample time (1.0 before any schedule entry)."""
        t = np.asarray(t, dtype=float)
        if not self.schedule:
            return np.ones_like(t)
        times = np.array([entry[0] for entry in self.schedule])
        scales = np.concatenate([[1.0], [entry[1] for entry in self.schedule]])
        return scales[np.searchsorted(times, t, side="right")]


@dataclass(frozen=True)
class GroundTruthSample:
    """True orientation and body rate at one instant."""

    t: float
    q_true: NDArray[np.float64]
    omega_true: NDArray[np.float64]


def generate_trajectory(
    segments: Sequence[TrajectorySegment],
    rate_hz: float,
) -> list[GroundTruthSample]:
    """Sample a hold/slew sequence on a uniform grid.

    The trajectory starts at identity unless the first segment is a hold,
    whose target then defines the start.  Hold targets must match the
    orientation reached by the previous segment, and a slew's
    ``rate * duration`` about its axis must land exactly on its target;
    violations raise ``ValueError``.  Samples are spaced ``1/rate_hz``
    apart, with segment boundaries half-open (a sample on a boundary
    belongs to the following segment).
    """
    if rate_hz <= 0.0:
        raise ValueError(f"sample rate must be positive, got {rate_hz!r}")
    if not segments:
        raise ValueError("trajectory needs at least one segment")

    # Validate continuity and collect each segment's start orientation.
    q_cur = segments[0].target if segments[0].kind == "hold" else identity_quat()
    starts: list[NDArray[np.float64]] = []
    for i, seg in enumerate(segments):
        starts.append(q_cur)
        if seg.kind == "hold":
            if rotation_error(q_cur, seg.target) > _SLEW_CONSISTENCY_TOL:
                raise ValueError(
                    f"segment {i}: hold target discontinuous with the previous "
                    f"orientation (gap {np.degrees(rotation_error(q_cur, seg.target)):.4f} deg)"
                )
        else:
            reached = quat_product(q_cur, axis_angle(seg.axis, seg.rate * seg.duration))
            if rotation_error(reached, seg.target) > _SLEW_CONSISTENCY_TOL:
                raise ValueError(
                    f"segment {i}: slew parameters inconsistent; rate*duration about "
                    f"axis misses the target by "
                    f"{np.degrees(rotation_error(reached, seg.target)):.4f} deg"
                )
        q_cur = seg.target

    boundaries = np.cumsum([seg.duration for seg in segments])
    total = float(boundaries[-1])
    n_samples = int(round(total * rate_hz))
    samples: list[GroundTruthSample] = []
    seg_idx = 0
    for k in range(n_samples):
        t = k / rate_hz
        while seg_idx < len(segments) - 1 and t >= boundaries[seg_idx]:
            seg_idx += 1
        seg = segments[seg_idx]
        t_start = 0.0 if seg_idx == 0 else float(boundaries[seg_idx - 1])
        if seg.kind == "hold":
            q = seg.target
            omega = np.zeros(3)
        else:
            tau = t - t_start
            q = quat_product(starts[seg_idx], axis_angle(seg.axis, seg.rate * tau))
            omega = seg.rate * seg.axis
        samples.append(GroundTruthSample(t=t, q_true=q, omega_true=omega))
    return samples


def _rotation_matrices(quats: NDArray[np.float64]) -> NDArray[np.float64]:
    """Rotation matrices for an (N, 4) array of unit quaternions."""
    w, x, y, z = quats[:, 0], quats[:, 1], quats[:, 2], quats[:, 3]
    R = np.empty((quats.shape[0], 3, 3))
    R[:, 0, 0] = 1.0 - 2.0 * (y * y + z * z)
    R[:, 0, 1] = 2.0 * (x * y - w * z)
    R[:, 0, 2] = 2.0 * (x * z + w * y)
    R[:, 1, 0] = 2.0 * (x * y + w * z)
    R[:, 1, 1] = 1.0 - 2.0 * (x * x + z * z)
    R[:, 1, 2] = 2.0 * (y * z - w * x)
    R[:, 2, 0] = 2.0 * (x * z - w * y)
    R[:, 2, 1] = 2.0 * (y * z + w * x)
    R[:, 2, 2] = 1.0 - 2.0 * (x * x + y * y)
    return R


def synthesize_measurements(
    truth: Sequence[GroundTruthSample],
    refs: ReferenceVectors,
    dist: DisturbanceModel,
    seed: int,
) -> list[Measurement]:
    """Apply the sensor models forward over a ground-truth stream.

    Gyro: true rate plus white noise.  Accelerometer: body-frame gravity
    direction plus noise and vibration, renormalized.  Magnetometer: soft
    iron applied to the body-frame field, plus hard iron and noise,
    renormalized.  Noise draws depend only on ``seed`` and the stream
    length, in the fixed order gyro, accel, mag.
    """
    if not truth:
        raise ValueError("ground-truth stream is empty")
    n = len(truth)
    t = np.array([s.t for s in truth])
    quats = np.array([s.q_true for s in truth])
    omegas = np.array([s.omega_true for s in truth])

    R = _rotation_matrices(quats)
    # Body-frame directions: z = R^T v for each sample.
    body_a = np.einsum("nji,j->ni", R, refs.a_r)
    body_m = np.einsum("nji,j->ni", R, refs.m_r)

    rng = np.random.default_rng(seed)
    gyro_noise = rng.standard_normal((n, 3)) * dist.gyro_noise_std
    accel_noise = rng.standard_normal((n, 3)) * dist.accel_noise_std
    mag_noise = rng.standard_normal((n, 3)) * dist.mag_noise_std

    scale = dist.scale_at(t)
    accel_raw = body_a + accel_noise
    if dist.vibration is not None and dist.vibration.amplitude > 0.0:
        wave = dist.vibration.amplitude * np.sin(2.0 * np.pi * dist.vibration.freq_hz * t)
        accel_raw = accel_raw + (scale * wave)[:, None] * _VIBRATION_DIR

    mag_raw = body_m @ dist.soft_iron.T + scale[:, None] * dist.hard_iron + mag_noise

    gyro = omegas + gyro_noise
    accel = accel_raw / np.linalg.norm(accel_raw, axis=1, keepdims=True)
    mag = mag_raw / np.linalg.norm(mag_raw, axis=1, keepdims=True)

    return [
        Measurement(t=float(t[i]), gyro=gyro[i], accel=accel[i], mag=mag[i])
        for i in range(n)
    ]
