"""Chart-based extended Kalman filter on the unit-quaternion manifold.

State: a chart selection, a reference quaternion ``qbar`` (the chart
center), the chart-space mean ``(e, omega)`` and a 6x6 covariance
(orientation block first, angular-velocity block second).  After every
completed step the state is recentered: the chart-space orientation mean is
folded into ``qbar`` and reset to zero.  The covariance is carried across
recentering unchanged.

Three measurement sets are supported:

- ``ekf1``        gyro + accelerometer,
- ``ekf2``        gyro + accelerometer + magnetometer,
- ``ekf2-triad``  as ``ekf2`` but the magnetic slot carries the third
  TRIAD column (anchored at the accelerometer), which decouples roll/pitch
  from magnetometer disturbance.

Measurement stacking puts the magnetic slot first: ``(z_m, z_a, z_omega)``.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Optional

import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy.linalg import cho_factor, cho_solve

from .charts import centered_chart_inverse, saturate, validate_chart
from .quat import as_vec3, normalize_quat, quat_product, to_rotation_matrix
from .triad import TriadDegenerateError, triad_measurement

MODES = ("ekf1", "ekf2", "ekf2-triad")

# Innovation covariance with a condition number above this aborts the step.
CONDITION_LIMIT = 1e12

# Predictions over gaps longer than this are refused (stale stream guard).
MAX_DT = 1.0

_EYE3 = np.eye(3)
_EYE6 = np.eye(6)


class FilterError(RuntimeError):
    """A filter step failed; carries the diagnostics gathered so far."""

    def __init__(self, message: str, diagnostics: "StepDiagnostics | None" = None):
        super().__init__(message)
        self.diagnostics = diagnostics


def _check_spd(name: str, mat: NDArray[np.float64]) -> NDArray[np.float64]:
    mat = np.asarray(mat, dtype=float)
    if mat.shape != (3, 3):
        raise ValueError(f"{name} must be 3x3, got shape {mat.shape}")
    if not np.allclose(mat, mat.T, atol=1e-12):
        raise ValueError(f"{name} must be symmetric")
    if np.linalg.eigvalsh(mat)[0] <= 0.0:
        raise ValueError(f"{name} must be positive definite")
    return mat


@dataclass(frozen=True)
class NoiseParams:
    """Process and measurement noise covariances.

    ``Q_omega`` is the angular-rate process noise spectral density in
    (rad/s)^2/s; ``R_omega`` is in (rad/s)^2; ``R_a`` and ``R_m`` apply to
    the normalized (dimensionless) direction measurements.
    """

    Q_omega: NDArray[np.float64]
    R_omega: NDArray[np.float64]
    R_a: NDArray[np.float64]
    R_m: NDArray[np.float64]

    def __post_init__(self):
        object.__setattr__(self, "Q_omega", _check_spd("Q_omega", self.Q_omega))
        object.__setattr__(self, "R_omega", _check_spd("R_omega", self.R_omega))
        object.__setattr__(self, "R_a", _check_spd("R_a", self.R_a))
        object.__setattr__(self, "R_m", _check_spd("R_m", self.R_m))

    @classmethod
    def from_scalars(
        cls,
        q_omega: float = 10.0,
        r_omega: float = 0.001,
        r_a: float = 0.01,
        r_m: float = 0.01,
    ) -> "NoiseParams":
        """Diagonal covariances with equal entries (the defaults are the
        reference tuning for the two-vector filter)."""
        return cls(
            Q_omega=q_omega * np.eye(3),
            R_omega=r_omega * np.eye(3),
            R_a=r_a * np.eye(3),
            R_m=r_m * np.eye(3),
        )

    def measurement_block(self, with_mag: bool) -> NDArray[np.float64]:
        """Stacked measurement covariance blockdiag(R_m?, R_a, R_omega)."""
        cache = self.__dict__.setdefault("_blocks", {})
        if with_mag not in cache:
            k = 9 if with_mag else 6
            R = np.zeros((k, k))
            if with_mag:
                R[:3, :3] = self.R_m
                R[3:6, 3:6] = self.R_a
                R[6:, 6:] = self.R_omega
            else:
                R[:3, :3] = self.R_a
                R[3:, 3:] = self.R_omega
            cache[with_mag] = R
        return cache[with_mag]


def _normalized_direction(name: str, v: ArrayLike) -> NDArray[np.float64]:
    v = as_vec3(v)
    norm = np.sqrt(v @ v)
    if norm < 1e-12:
        raise ValueError(f"{name} has zero norm; cannot normalize a direction")
    return v / norm


@dataclass(frozen=True)
class Measurement:
    """One timestamped sensor frame.

    ``accel`` and ``mag`` are normalized to unit length on construction;
    ``mag`` may be None for gyro+accelerometer-only streams.
    """

    t: float
    gyro: NDArray[np.float64]
    accel: NDArray[np.float64]
    mag: Optional[NDArray[np.float64]] = None

    def __post_init__(self):
        if not np.isfinite(self.t):
            raise ValueError("measurement timestamp must be finite")
        object.__setattr__(self, "gyro", as_vec3(self.gyro))
        object.__setattr__(self, "accel", _normalized_direction("accel", self.accel))
        if self.mag is not None:
            object.__setattr__(self, "mag", _normalized_direction("mag", self.mag))


@dataclass(frozen=True)
class ReferenceVectors:
    """Global-frame reference directions and their TRIAD-derived companions.

    ``c2r = (a_r x m_r)/|a_r x m_r|`` and ``c3r = a_r x c2r``; the triple
    ``(a_r, c2r, c3r)`` is right-handed orthonormal.
    """

    a_r: NDArray[np.float64]
    m_r: NDArray[np.float64]
    c2r: NDArray[np.float64]
    c3r: NDArray[np.float64]

    @classmethod
    def make(cls, a_r: ArrayLike, m_r: ArrayLike) -> "ReferenceVectors":
        """Build from gravity and field directions (normalized here)."""
        a_r = _normalized_direction("a_r", a_r)
        m_r = _normalized_direction("m_r", m_r)
        cross = np.cross(a_r, m_r)
        norm = np.sqrt(cross @ cross)
        if norm <= 1e-6:
            raise ValueError("a_r and m_r are nearly parallel; no TRIAD references exist")
        c2r = cross / norm
        c3r = np.cross(a_r, c2r)
        return cls(a_r=a_r, m_r=m_r, c2r=c2r, c3r=c3r)

    @classmethod
    def from_inclination(
        cls,
        inclination_deg: float,
        declination_deg: float = 0.0,
        a_r: ArrayLike = (0.0, 0.0, -1.0),
    ) -> "ReferenceVectors":
        """Field direction from dip and declination angles.

        Uses the same sign convention as the default gravity reading
        ``a_r = (0, 0, -1)``: a downward (positive) inclination gives a
        negative third component, e.g. +28.65 deg -> (0.8775, 0, -0.4795).
        """
        inc = np.radians(inclination_deg)
        dec = np.radians(declination_deg)
        m_r = np.array(
            [np.cos(inc) * np.cos(dec), np.cos(inc) * np.sin(dec), -np.sin(inc)]
        )
        return cls.make(a_r, m_r)

    def mag_reference(self, triad_column: str) -> NDArray[np.float64]:
        """Reference used in the magnetic slot by the TRIAD-aided filter."""
        if triad_column == "c3":
            return self.c3r
        if triad_column == "c2":
            return self.c2r
        raise ValueError(f"triad column must be 'c2' or 'c3', got {triad_column!r}")


@dataclass
class FilterState:
    """The filter's four: chart, chart center, chart-space mean, covariance.

    ``e_mean`` is zero immediately after every completed step (the state is
    recentered onto the new chart).  ``t`` is the timestamp of the last
    measurement folded in, None before the first.
    """

    chart: str
    qbar: NDArray[np.float64]
    e_mean: NDArray[np.float64]
    omega_mean: NDArray[np.float64]
    P: NDArray[np.float64]
    t: Optional[float] = None


@dataclass
class StepDiagnostics:
    """Per-step byproducts: innovation, its covariance, gain, trace of P."""

    residual: NDArray[np.float64]
    residual_norm: float
    S: NDArray[np.float64]
    K: NDArray[np.float64]
    P_trace: float
    # Measurement set actually applied this step; differs from the requested
    # mode only when TRIAD geometry degenerates and the step falls back.
    measurement_set: str = ""


def init_state(
    chart: str,
    q0: ArrayLike,
    omega0: ArrayLike,
    P0: ArrayLike,
) -> FilterState:
    """Create a recentered state at ``q0`` with covariance ``P0``.

    Raises
    ------
    ValueError
        If the chart name is unknown or ``P0`` is not symmetric positive
        semidefinite.
    """
    validate_chart(chart)
    q0 = normalize_quat(q0)
    omega0 = as_vec3(omega0)
    P0 = np.asarray(P0, dtype=float)
    if P0.shape != (6, 6):
        raise ValueError(f"P0 must be 6x6, got shape {P0.shape}")
    if not np.allclose(P0, P0.T, atol=1e-9):
        raise ValueError("P0 must be symmetric")
    if np.linalg.eigvalsh(P0)[0] < -1e-9:
        raise ValueError("P0 must be positive semidefinite")
    return FilterState(
        chart=chart,
        qbar=q0,
        e_mean=np.zeros(3),
        omega_mean=omega0,
        P=P0.copy(),
        t=None,
    )


def _rate_deviation(omega: NDArray[np.float64], dt: float) -> NDArray[np.float64]:
    """Deviation quaternion for constant body rate ``omega`` over ``dt``."""
    speed = np.sqrt(omega @ omega)
    angle = speed * dt
    if angle < 1e-10:
        return np.array([1.0, 0.0, 0.0, 0.0])
    half = 0.5 * angle
    out = np.empty(4)
    out[0] = np.cos(half)
    out[1:] = (np.sin(half) / speed) * omega
    return out


def predict(state: FilterState, noise: NoiseParams, dt: float) -> FilterState:
    """Propagate the state assuming zero angular acceleration.

    The chart center advances by the constant-rate deviation quaternion and
    the covariance by ``F (P + Q) F^T`` with the transition linearized about
    that deviation.

    Raises
    ------
    ValueError
        If ``dt <= 0`` or ``dt > MAX_DT`` (stale stream).
    """
    if dt <= 0.0:
        raise ValueError(f"prediction interval must be positive, got {dt!r}")
    if dt > MAX_DT:
        raise ValueError(f"prediction interval {dt!r}s exceeds the {MAX_DT}s stale-stream guard")
    delta = _rate_deviation(state.omega_mean, dt)
    qbar = quat_product(state.qbar, delta) if delta[0] != 1.0 else state.qbar

    F = np.zeros((6, 6))
    F[:3, :3] = to_rotation_matrix(delta).T
    F[:3, 3:] = _EYE3 * dt
    F[3:, 3:] = _EYE3

    Qw = noise.Q_omega
    Qn = np.empty((6, 6))
    Qn[:3, :3] = Qw * (dt**3 / 3.0)
    Qn[:3, 3:] = Qw * (-(dt**2) / 2.0)
    Qn[3:, :3] = Qn[:3, 3:]
    Qn[3:, 3:] = Qw * dt

    P = F @ (state.P + Qn) @ F.T
    return FilterState(
        chart=state.chart,
        qbar=qbar,
        e_mean=np.zeros(3),
        omega_mean=state.omega_mean.copy(),
        P=P,
        t=state.t,
    )


def _resolve_measurement_set(
    mode: str,
    meas: Measurement | None,
    triad_column: str,
) -> tuple[str, NDArray[np.float64] | None]:
    """Pick the measurement set for this step and the magnetic-slot value.

    For ``ekf2-triad`` the magnetic slot carries the TRIAD column computed
    from the measurement; near-parallel geometry degrades the step to
    ``ekf1`` instead of failing the run.
    """
    if mode not in MODES:
        raise ValueError(f"unknown filter mode {mode!r}; valid modes: {', '.join(MODES)}")
    if mode == "ekf1":
        return "ekf1", None
    if meas is not None and meas.mag is None:
        raise ValueError(f"mode {mode!r} requires magnetometer measurements")
    if mode == "ekf2":
        return "ekf2", None if meas is None else meas.mag
    if meas is None:
        return "ekf2-triad", None
    try:
        return "ekf2-triad", triad_measurement(meas.accel, meas.mag, triad_column)
    except TriadDegenerateError:
        return "ekf1", None


def predict_measurement(
    state: FilterState,
    refs: ReferenceVectors,
    mode: str,
    triad_column: str = "c3",
) -> NDArray[np.float64]:
    """Predicted measurement vector for the given mode.

    ``ekf1`` returns ``(z_a, z_omega)`` stacked (6,); the two-vector modes
    prepend the magnetic slot for a (9,) vector.  The magnetic reference is
    ``m_r`` for ``ekf2`` and the TRIAD column reference for ``ekf2-triad``.
    """
    set_name, _ = _resolve_measurement_set(mode, None, triad_column)
    RT = to_rotation_matrix(state.qbar).T
    z_a = RT @ refs.a_r
    if set_name == "ekf1":
        return np.concatenate([z_a, state.omega_mean])
    ref_m = refs.m_r if set_name == "ekf2" else refs.mag_reference(triad_column)
    return np.concatenate([RT @ ref_m, z_a, state.omega_mean])


def _set_cross_block(H: NDArray[np.float64], row: int, v: NDArray[np.float64]) -> None:
    """Write ``[v]x`` into ``H[row:row+3, 0:3]`` (off-diagonals only; the
    destination is freshly zeroed)."""
    H[row, 1] = -v[2]
    H[row, 2] = v[1]
    H[row + 1, 0] = v[2]
    H[row + 1, 2] = -v[0]
    H[row + 2, 0] = -v[1]
    H[row + 2, 1] = v[0]


def _condition_exceeded(S: NDArray[np.float64]) -> bool:
    """True if cond(S) > CONDITION_LIMIT or S is not positive definite.

    Gershgorin disc bounds prove most matrices fine without an eigenvalue
    solve; only matrices the bounds cannot clear pay for an exact check.
    """
    d = S.diagonal()
    radius = np.abs(S).sum(axis=1) - np.abs(d)
    lo = float((d - radius).min())
    hi = float((d + radius).max())
    if lo > 0.0 and np.isfinite(hi) and hi / lo <= CONDITION_LIMIT:
        return False
    try:
        eigs = np.linalg.eigvalsh(S)
    except np.linalg.LinAlgError:
        return True
    return not np.isfinite(eigs[0]) or eigs[0] <= 0.0 or eigs[-1] / eigs[0] > CONDITION_LIMIT


def update(
    state: FilterState,
    meas: Measurement,
    refs: ReferenceVectors,
    noise: NoiseParams,
    mode: str,
    triad_column: str = "c3",
) -> tuple[FilterState, StepDiagnostics]:
    """Fold one measurement into the state and recenter the chart.

    The measurement Jacobian uses cross-product matrices of the *predicted*
    direction measurements in the orientation block and the identity in the
    angular-velocity block.  After the covariance update the chart-space
    mean is saturated into the chart image and absorbed into a new chart
    center; the covariance is carried over unchanged.

    Raises
    ------
    FilterError
        If the innovation covariance is ill-conditioned (condition number
        above `CONDITION_LIMIT`) or any result is non-finite.  The
        exception carries the diagnostics gathered so far.
    """
    set_name, z_mag = _resolve_measurement_set(mode, meas, triad_column)
    with_mag = set_name != "ekf1"

    RT = to_rotation_matrix(state.qbar).T
    zbar_a = RT @ refs.a_r
    omega = state.omega_mean
    if with_mag:
        ref_m = refs.m_r if set_name == "ekf2" else refs.mag_reference(triad_column)
        zbar_m = RT @ ref_m
        z = np.concatenate([z_mag, meas.accel, meas.gyro])
        zbar = np.concatenate([zbar_m, zbar_a, omega])
        H = np.zeros((9, 6))
        _set_cross_block(H, 0, zbar_m)
        _set_cross_block(H, 3, zbar_a)
        H[6:, 3:] = _EYE3
    else:
        z = np.concatenate([meas.accel, meas.gyro])
        zbar = np.concatenate([zbar_a, omega])
        H = np.zeros((6, 6))
        _set_cross_block(H, 0, zbar_a)
        H[3:, 3:] = _EYE3

    residual = z - zbar
    P = state.P
    PHt = P @ H.T
    S = H @ PHt + noise.measurement_block(with_mag)

    diag = StepDiagnostics(
        residual=residual,
        residual_norm=float(np.sqrt(residual @ residual)),
        S=S,
        K=np.zeros((6, S.shape[0])),
        P_trace=float(P.trace()),
        measurement_set=set_name,
    )

    if _condition_exceeded(S):
        raise FilterError(
            f"innovation covariance ill-conditioned beyond {CONDITION_LIMIT:g}", diag
        )
    # Solve S K^T = (P H^T)^T via symmetric factorization; never form S^-1.
    # Finiteness was established by the condition guard above.
    try:
        K = cho_solve(cho_factor(S, lower=True, check_finite=False), PHt.T, check_finite=False).T
    except np.linalg.LinAlgError as exc:
        raise FilterError(f"innovation covariance factorization failed: {exc}", diag) from exc
    diag.K = K

    dx = K @ residual
    e_upd = saturate(state.chart, dx[:3])
    omega_new = omega + dx[3:]
    P_new = (_EYE6 - K @ H) @ P
    P_new = 0.5 * (P_new + P_new.T)

    # Recenter: the updated chart point becomes the new chart's origin.
    qbar_new = centered_chart_inverse(state.qbar, state.chart, e_upd)
    diag.P_trace = float(P_new.trace())

    # NaN/Inf propagate through sums, so one scalar probes the whole state.
    probe = float(P_new.sum() + qbar_new.sum() + omega_new.sum())
    if not np.isfinite(probe):
        raise FilterError("non-finite filter state after update", diag)

    new_state = FilterState(
        chart=state.chart,
        qbar=qbar_new,
        e_mean=np.zeros(3),
        omega_mean=omega_new,
        P=P_new,
        t=state.t,
    )
    return new_state, diag


def step(
    state: FilterState,
    meas: Measurement,
    refs: ReferenceVectors,
    noise: NoiseParams,
    mode: str,
    triad_column: str = "c3",
) -> tuple[FilterState, StepDiagnostics]:
    """Predict over the inter-measurement gap, then update.

    The first measurement of a stream initializes the clock without
    predicting.  Timestamps must be strictly increasing.
    """
    if state.t is None:
        current = replace(state, t=float(meas.t))
    else:
        dt = float(meas.t) - state.t
        if dt <= 0.0:
            raise ValueError(
                f"non-monotone measurement stream: t={meas.t!r} after t={state.t!r}"
            )
        current = predict(state, noise, dt)
        current.t = float(meas.t)
    return update(current, meas, refs, noise, mode, triad_column)
