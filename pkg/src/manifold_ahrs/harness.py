"""Scenario execution: run filter modes over a measurement stream, compute
per-step metrics against ground truth and summarize per trajectory segment.

All file formats are CSV with a required header and ``#``-prefixed comment
lines that echo the scenario (and, for metrics files, the segment layout),
so every output is self-describing and summaries can be recomputed without
re-running filters.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np
from numpy.typing import NDArray

from .config import ScenarioConfig, filter_mode_of
from .mekf import (
    FilterError,
    FilterState,
    Measurement,
    ReferenceVectors,
    init_state,
    step,
)
from .quat import axis_angle, identity_quat, normalize_quat, quat_product
from .sim import GroundTruthSample, generate_trajectory, synthesize_measurements

SENSOR_COLUMNS = ("t_s", "gx_rads", "gy_rads", "gz_rads", "ax", "ay", "az", "mx", "my", "mz")
TRUTH_COLUMNS = ("t_s", "qw", "qx", "qy", "qz")
METRICS_COLUMNS = (
    "t_s",
    "rot_err_deg",
    "rot_angle_deg",
    "residual_norm",
    "p_trace",
    "yaw_err_deg",
    "pitch_err_deg",
    "roll_err_deg",
)

# Fraction of each hold treated as settled when reading steady-state values.
STEADY_STATE_FRACTION = 0.25

# Axis applied to the optional initial-attitude error; fixed so runs stay
# deterministic without consuming the scenario seed.
_INIT_ERROR_AXIS = np.array([1.0, 1.0, 1.0]) / np.sqrt(3.0)

_FLOAT_FMT = "%.17g"


class LogFormatError(ValueError):
    """A CSV input failed validation; the message names file and line."""


@dataclass(frozen=True)
class SegmentWindow:
    """Time window of one trajectory segment, with a reporting label."""

    index: int
    kind: str
    label: str
    t0: float
    t1: float
    axis: tuple[float, float, float]
    angle_deg: float

    def to_json(self) -> str:
        return json.dumps(
            {
                "index": self.index,
                "kind": self.kind,
                "label": self.label,
                "t0": self.t0,
                "t1": self.t1,
                "axis": list(self.axis),
                "angle_deg": self.angle_deg,
            }
        )

    @classmethod
    def from_json(cls, text: str) -> "SegmentWindow":
        data = json.loads(text)
        return cls(
            index=int(data["index"]),
            kind=str(data["kind"]),
            label=str(data["label"]),
            t0=float(data["t0"]),
            t1=float(data["t1"]),
            axis=tuple(float(v) for v in data["axis"]),
            angle_deg=float(data["angle_deg"]),
        )


@dataclass
class SegmentStats:
    """Rotation-error statistics of one mode over one segment."""

    segment: SegmentWindow
    max_err_deg: float
    mean_err_deg: float
    final_err_deg: float
    steady_err_deg: Optional[float] = None
    steady_residual: Optional[float] = None
    steady_yaw_err_deg: Optional[float] = None
    steady_pitch_err_deg: Optional[float] = None
    steady_roll_err_deg: Optional[float] = None


@dataclass
class ModeResult:
    """Everything one filter mode produced over a scenario."""

    mode: str
    metrics: NDArray[np.float64]  # shape (N, len(METRICS_COLUMNS))
    failed: Optional[str] = None
    segment_stats: list[SegmentStats] = field(default_factory=list)


@dataclass
class ScenarioResult:
    """Output of `run_scenario`: shared inputs plus per-mode results."""

    config: ScenarioConfig
    measurements: list[Measurement]
    truth: Optional[list[GroundTruthSample]]
    segments: list[SegmentWindow]
    modes: dict[str, ModeResult]


def metrics_column(metrics: NDArray[np.float64], name: str) -> NDArray[np.float64]:
    """One named column of a metrics array."""
    return metrics[:, METRICS_COLUMNS.index(name)]


def _classify_target(target: NDArray[np.float64]) -> tuple[tuple[float, float, float], float, str]:
    """Axis, angle and a short label ('yaw90', 'roll180', ...) for a target."""
    q = normalize_quat(target)
    if q[0] < 0.0:
        q = -q
    angle = 2.0 * float(np.arccos(min(q[0], 1.0)))
    angle_deg = float(np.degrees(angle))
    if angle < 1e-9:
        return (0.0, 0.0, 1.0), 0.0, "identity"
    dv = q[1:]
    axis = dv / np.sqrt(dv @ dv)
    names = ("roll", "pitch", "yaw")
    dominant = int(np.argmax(np.abs(axis)))
    if abs(abs(axis[dominant]) - 1.0) < 1e-6:
        sign = "-" if axis[dominant] < 0.0 else ""
        label = f"{names[dominant]}{sign}{angle_deg:g}"
    else:
        label = f"axis({axis[0]:.2f},{axis[1]:.2f},{axis[2]:.2f}){angle_deg:g}"
    return (float(axis[0]), float(axis[1]), float(axis[2])), angle_deg, label


def segment_windows(cfg: ScenarioConfig) -> list[SegmentWindow]:
    """Time windows of the configured trajectory segments."""
    if cfg.segments is None:
        return []
    windows = []
    t0 = 0.0
    for i, seg in enumerate(cfg.segments):
        axis, angle_deg, label = _classify_target(seg.target)
        if seg.kind == "slew":
            label = f"slew>{label}"
        windows.append(
            SegmentWindow(
                index=i,
                kind=seg.kind,
                label=label,
                t0=t0,
                t1=t0 + seg.duration,
                axis=axis,
                angle_deg=angle_deg,
            )
        )
        t0 += seg.duration
    return windows


def _initial_state(cfg: ScenarioConfig, truth: Optional[list[GroundTruthSample]]) -> FilterState:
    if truth:
        q0 = truth[0].q_true
        omega0 = truth[0].omega_true
    else:
        q0 = identity_quat()
        omega0 = np.zeros(3)
    if cfg.init_error_deg:
        q0 = quat_product(q0, axis_angle(_INIT_ERROR_AXIS, np.radians(cfg.init_error_deg)))
    return init_state(cfg.chart, q0, omega0, cfg.p0 * np.eye(6))


def _attitude_metrics(
    metrics: NDArray[np.float64],
    qbars: NDArray[np.float64],
    truth: Optional[list[GroundTruthSample]],
) -> None:
    """Fill the quaternion-derived metric columns (vectorized)."""
    n = metrics.shape[0]
    if n == 0:
        return
    q = qbars[:n]
    metrics[:, 2] = np.degrees(2.0 * np.arccos(np.minimum(np.abs(q[:, 0]), 1.0)))
    if truth is None:
        return
    qt = np.array([truth[i].q_true for i in range(n)])
    dots = np.abs(np.einsum("ij,ij->i", q, qt))
    metrics[:, 1] = np.degrees(2.0 * np.arccos(np.minimum(dots, 1.0)))
    # Error rotation conj(qbar) * q_true, then intrinsic Z-Y-X angles.
    w1, x1, y1, z1 = q[:, 0], -q[:, 1], -q[:, 2], -q[:, 3]
    w2, x2, y2, z2 = qt[:, 0], qt[:, 1], qt[:, 2], qt[:, 3]
    ew = w1 * w2 - x1 * x2 - y1 * y2 - z1 * z2
    ex = w1 * x2 + x1 * w2 + y1 * z2 - z1 * y2
    ey = w1 * y2 - x1 * z2 + y1 * w2 + z1 * x2
    ez = w1 * z2 + x1 * y2 - y1 * x2 + z1 * w2
    r00 = 1.0 - 2.0 * (ey * ey + ez * ez)
    r10 = 2.0 * (ex * ey + ew * ez)
    r20 = 2.0 * (ex * ez - ew * ey)
    r21 = 2.0 * (ey * ez + ew * ex)
    r22 = 1.0 - 2.0 * (ex * ex + ey * ey)
    metrics[:, 5] = np.degrees(np.arctan2(r10, r00))
    metrics[:, 6] = np.degrees(np.arcsin(np.clip(-r20, -1.0, 1.0)))
    metrics[:, 7] = np.degrees(np.arctan2(r21, r22))


def _run_mode(
    cfg: ScenarioConfig,
    label: str,
    measurements: list[Measurement],
    truth: Optional[list[GroundTruthSample]],
) -> ModeResult:
    mode = filter_mode_of(label)
    noise = cfg.noise[label]
    state = _initial_state(cfg, truth)
    n = len(measurements)
    metrics = np.full((n, len(METRICS_COLUMNS)), np.nan)
    qbars = np.empty((n, 4))
    failed = None
    count = n
    for i, meas in enumerate(measurements):
        try:
            state, diag = step(state, meas, cfg.refs, noise, mode, cfg.triad_column)
        except (FilterError, ValueError) as exc:
            failed = str(exc)
            count = i
            break
        row = metrics[i]
        row[0] = meas.t
        row[3] = diag.residual_norm
        row[4] = diag.P_trace
        qbars[i] = state.qbar
    metrics = metrics[:count]
    _attitude_metrics(metrics, qbars, truth)
    return ModeResult(mode=label, metrics=metrics, failed=failed)


def summarize_mode(metrics: NDArray[np.float64], segments: Sequence[SegmentWindow]) -> list[SegmentStats]:
    """Per-segment statistics; steady-state values on holds only.

    Steady-state values are means over the final `STEADY_STATE_FRACTION`
    of each hold, after slew transients have died out.
    """
    stats: list[SegmentStats] = []
    if metrics.shape[0] == 0:
        return stats
    t = metrics_column(metrics, "t_s")
    err = metrics_column(metrics, "rot_err_deg")
    for seg in segments:
        sel = (t >= seg.t0) & (t < seg.t1)
        if not np.any(sel):
            continue
        seg_err = err[sel]
        entry = SegmentStats(
            segment=seg,
            max_err_deg=float(np.nanmax(seg_err)) if not np.all(np.isnan(seg_err)) else np.nan,
            mean_err_deg=float(np.nanmean(seg_err)) if not np.all(np.isnan(seg_err)) else np.nan,
            final_err_deg=float(seg_err[-1]),
        )
        if seg.kind == "hold":
            t_sel = t[sel]
            steady = t_sel >= seg.t1 - STEADY_STATE_FRACTION * (seg.t1 - seg.t0)
            def _steady_mean(name: str) -> float:
                vals = metrics_column(metrics, name)[sel][steady]
                if vals.size == 0 or np.isnan(vals).all():
                    return np.nan
                return float(np.nanmean(vals))
            entry.steady_err_deg = _steady_mean("rot_err_deg")
            entry.steady_residual = _steady_mean("residual_norm")
            entry.steady_yaw_err_deg = _steady_mean("yaw_err_deg")
            entry.steady_pitch_err_deg = _steady_mean("pitch_err_deg")
            entry.steady_roll_err_deg = _steady_mean("roll_err_deg")
        stats.append(entry)
    return stats


def run_scenario(cfg: ScenarioConfig) -> ScenarioResult:
    """Execute every configured mode over one shared measurement stream.

    Simulated scenarios synthesize the stream from the trajectory,
    disturbance model and seed; log-based scenarios ingest it.  A mode that
    fails mid-run is recorded as failed (with partial metrics) and the
    remaining modes still run.
    """
    if cfg.input_log is not None:
        measurements = ingest_log(cfg.input_log)
        truth = read_truth_log(cfg.truth_log, measurements) if cfg.truth_log else None
        t0 = measurements[0].t
        t1 = measurements[-1].t
        segments = [
            SegmentWindow(
                index=0,
                kind="hold",
                label="stream",
                t0=t0,
                t1=t1 + (t1 - t0) * 1e-9 + 1e-12,
                axis=(0.0, 0.0, 1.0),
                angle_deg=0.0,
            )
        ]
    else:
        truth = generate_trajectory(cfg.segments, cfg.rate_hz)
        measurements = synthesize_measurements(truth, cfg.refs, cfg.disturbance, cfg.seed)
        segments = segment_windows(cfg)

    modes: dict[str, ModeResult] = {}
    for label in cfg.modes:
        result = _run_mode(cfg, label, measurements, truth)
        result.segment_stats = summarize_mode(result.metrics, segments)
        modes[label] = result
    return ScenarioResult(
        config=cfg,
        measurements=measurements,
        truth=truth,
        segments=segments,
        modes=modes,
    )


def calibrate_references(static_stream: Sequence[Measurement]) -> ReferenceVectors:
    """Reference directions from a nominally static stream.

    Normalized per-axis means of the accelerometer and magnetometer
    directions define the identity orientation.

    Raises
    ------
    ValueError
        For streams shorter than 100 samples, missing magnetometer data,
        or mean directions with norm below 0.5 (the stream moved).
    """
    if len(static_stream) < 100:
        raise ValueError(
            f"calibration needs at least 100 samples, got {len(static_stream)}"
        )
    if any(m.mag is None for m in static_stream):
        raise ValueError("calibration needs magnetometer data in every sample")
    accel_mean = np.mean([m.accel for m in static_stream], axis=0)
    mag_mean = np.mean([m.mag for m in static_stream], axis=0)
    for name, mean in (("accel", accel_mean), ("mag", mag_mean)):
        norm = float(np.linalg.norm(mean))
        if norm < 0.5:
            raise ValueError(
                f"inconsistent calibration stream: mean {name} norm {norm:.3f} < 0.5 "
                "(the device moved during calibration)"
            )
    return ReferenceVectors.make(accel_mean, mag_mean)


# ---------------------------------------------------------------------------
# CSV input/output


def _config_comment_lines(cfg: ScenarioConfig) -> list[str]:
    echo = json.dumps(cfg.raw, sort_keys=True, default=str)
    return [f"# config: {echo}"]


def _write_csv(
    path: Path,
    header: Sequence[str],
    rows: Sequence[Sequence],
    comments: Sequence[str],
) -> None:
    with open(path, "w", newline="") as fh:
        for line in comments:
            fh.write(line + "\n")
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow([_FLOAT_FMT % v if isinstance(v, float) else v for v in row])


def write_sensor_log(path: str | Path, measurements: Sequence[Measurement], cfg: ScenarioConfig | None = None) -> None:
    """Write a sensor-log CSV (`SENSOR_COLUMNS`); absent mag leaves blanks."""
    rows = []
    for m in measurements:
        row: list = [float(m.t), *map(float, m.gyro), *map(float, m.accel)]
        row.extend(map(float, m.mag) if m.mag is not None else ["", "", ""])
        rows.append(row)
    comments = ["# manifold-ahrs sensor-log v1"]
    if cfg is not None:
        comments += _config_comment_lines(cfg)
    _write_csv(Path(path), SENSOR_COLUMNS, rows, comments)


def write_truth_log(path: str | Path, truth: Sequence[GroundTruthSample], cfg: ScenarioConfig | None = None) -> None:
    """Write a ground-truth CSV (`TRUTH_COLUMNS`)."""
    rows = [[float(s.t), *map(float, s.q_true)] for s in truth]
    comments = ["# manifold-ahrs truth-log v1"]
    if cfg is not None:
        comments += _config_comment_lines(cfg)
    _write_csv(Path(path), TRUTH_COLUMNS, rows, comments)


def write_metrics_csv(
    path: str | Path,
    result: ModeResult,
    segments: Sequence[SegmentWindow],
    cfg: ScenarioConfig | None = None,
) -> None:
    """Write one mode's metrics CSV with segment metadata comments."""
    comments = ["# manifold-ahrs metrics v1", f"# mode: {result.mode}"]
    if cfg is not None:
        comments += _config_comment_lines(cfg)
    for seg in segments:
        comments.append(f"# segment: {seg.to_json()}")
    if result.failed:
        comments.append(f"# failed: {result.failed}")
    rows = [[float(v) for v in row] for row in result.metrics]
    _write_csv(Path(path), METRICS_COLUMNS, rows, comments)


def _read_csv(path: Path, expected_header: Sequence[str]):
    """Yield (lineno, fields) data rows; returns comments via the first yield.

    Implemented as a helper returning (comments, rows) because callers need
    the comment block for metadata.
    """
    comments: list[str] = []
    rows: list[tuple[int, list[str]]] = []
    try:
        text = path.read_text()
    except OSError as exc:
        raise LogFormatError(f"cannot read {path}: {exc}") from exc
    header_seen = False
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        if line.startswith("#"):
            comments.append(line)
            continue
        fields = next(csv.reader(io.StringIO(line)))
        if not header_seen:
            if [f.strip() for f in fields] != list(expected_header):
                raise LogFormatError(
                    f"{path}:{lineno}: expected header {','.join(expected_header)}"
                )
            header_seen = True
            continue
        rows.append((lineno, fields))
    if not header_seen:
        raise LogFormatError(f"{path}: missing header row")
    return comments, rows


def ingest_log(path: str | Path) -> list[Measurement]:
    """Read and validate a sensor-log CSV.

    Accelerometer and magnetometer columns may use any consistent scale;
    directions are normalized at ingestion.  Empty mag fields mark samples
    without magnetometer data.

    Raises
    ------
    LogFormatError
        On malformed rows (with the line number) or non-monotone time.
    """
    path = Path(path)
    _, rows = _read_csv(path, SENSOR_COLUMNS)
    measurements: list[Measurement] = []
    prev_t = None
    for lineno, fields in rows:
        if len(fields) != len(SENSOR_COLUMNS):
            raise LogFormatError(
                f"{path}:{lineno}: expected {len(SENSOR_COLUMNS)} fields, got {len(fields)}"
            )
        mag_fields = [f.strip() for f in fields[7:10]]
        has_mag = any(mag_fields)
        try:
            values = [float(f) for f in fields[:7]]
            mag = [float(f) for f in mag_fields] if has_mag else None
        except ValueError as exc:
            raise LogFormatError(f"{path}:{lineno}: {exc}") from exc
        t = values[0]
        if prev_t is not None and t <= prev_t:
            raise LogFormatError(
                f"{path}:{lineno}: non-monotone timestamp {t!r} after {prev_t!r}"
            )
        prev_t = t
        try:
            measurements.append(
                Measurement(t=t, gyro=values[1:4], accel=values[4:7], mag=mag)
            )
        except ValueError as exc:
            raise LogFormatError(f"{path}:{lineno}: {exc}") from exc
    if not measurements:
        raise LogFormatError(f"{path}: no data rows")
    return measurements


def read_truth_log(
    path: str | Path,
    measurements: Sequence[Measurement] | None = None,
) -> list[GroundTruthSample]:
    """Read a ground-truth CSV; validates 1:1 alignment when measurements
    are supplied."""
    path = Path(path)
    _, rows = _read_csv(path, TRUTH_COLUMNS)
    truth: list[GroundTruthSample] = []
    for lineno, fields in rows:
        if len(fields) != len(TRUTH_COLUMNS):
            raise LogFormatError(
                f"{path}:{lineno}: expected {len(TRUTH_COLUMNS)} fields, got {len(fields)}"
            )
        try:
            values = [float(f) for f in fields]
        except ValueError as exc:
            raise LogFormatError(f"{path}:{lineno}: {exc}") from exc
        truth.append(
            GroundTruthSample(
                t=values[0],
                q_true=normalize_quat(values[1:5]),
                omega_true=np.zeros(3),
            )
        )
    if measurements is not None:
        if len(truth) != len(measurements):
            raise LogFormatError(
                f"{path}: {len(truth)} truth rows do not match "
                f"{len(measurements)} measurements"
            )
        for s, m in zip(truth, measurements):
            if abs(s.t - m.t) > 1e-9:
                raise LogFormatError(
                    f"{path}: truth timestamp {s.t!r} does not match measurement {m.t!r}"
                )
    return truth


def read_metrics_csv(path: str | Path):
    """Read a metrics CSV back: (mode, metrics array, segments, comments)."""
    path = Path(path)
    comments, rows = _read_csv(path, METRICS_COLUMNS)
    mode = path.stem
    segments: list[SegmentWindow] = []
    for line in comments:
        body = line.lstrip("#").strip()
        if body.startswith("mode:"):
            mode = body[len("mode:"):].strip()
        elif body.startswith("segment:"):
            segments.append(SegmentWindow.from_json(body[len("segment:"):].strip()))
    data = np.empty((len(rows), len(METRICS_COLUMNS)))
    for i, (lineno, fields) in enumerate(rows):
        if len(fields) != len(METRICS_COLUMNS):
            raise LogFormatError(
                f"{path}:{lineno}: expected {len(METRICS_COLUMNS)} fields, got {len(fields)}"
            )
        try:
            data[i] = [float(f) if f.strip() else np.nan for f in fields]
        except ValueError as exc:
            raise LogFormatError(f"{path}:{lineno}: {exc}") from exc
    return mode, data, segments, comments


# ---------------------------------------------------------------------------
# Summary rendering


def _mode_sort_key(label: str):
    from .config import MODE_LABELS

    return (MODE_LABELS.index(label) if label in MODE_LABELS else len(MODE_LABELS), label)


def format_summary(result_modes: dict[str, ModeResult], segments: Sequence[SegmentWindow]) -> str:
    """Human-readable per-segment error table across modes.

    Mode columns follow a canonical order so summaries recomputed from
    persisted metrics match the original run byte for byte.
    """
    lines = []
    labels = sorted(result_modes, key=_mode_sort_key)
    header = f"{'segment':<16}{'window':<16}" + "".join(f"{label:>16}" for label in labels)
    lines.append(header)
    lines.append("-" * len(header))
    for seg in segments:
        window = f"[{seg.t0:.1f},{seg.t1:.1f})s"
        cells = []
        for label in labels:
            stats = next(
                (s for s in result_modes[label].segment_stats if s.segment.index == seg.index),
                None,
            )
            if stats is None:
                cells.append(f"{'-':>16}")
            else:
                value = stats.steady_err_deg if stats.steady_err_deg is not None else stats.mean_err_deg
                cells.append(f"{value:>15.3f}°" if np.isfinite(value) else f"{'n/a':>16}")
        lines.append(f"{seg.label:<16}{window:<16}" + "".join(cells))
    failed = [label for label, r in result_modes.items() if r.failed]
    for label in failed:
        lines.append(f"FAILED {label}: {result_modes[label].failed}")
    lines.append("")
    lines.append("cell = steady-state rotation error over the final "
                 f"{int(STEADY_STATE_FRACTION * 100)}% of each hold (mean error on slews)")
    return "\n".join(lines)
