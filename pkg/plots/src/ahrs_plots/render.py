"""Figure rendering from the harness CSV schemas.

Reads only the documented file formats: per-mode metrics CSVs
(``t_s,rot_err_deg,rot_angle_deg,residual_norm,p_trace,yaw_err_deg,
pitch_err_deg,roll_err_deg``) and, for the magnetometer scatter, sensor-log
CSVs (``t_s,gx_rads,...,mx,my,mz``).  Comment lines starting with ``#`` are
ignored.  Styling is fixed and no timestamps enter the image, so identical
inputs render identical files.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

FIGURE_KINDS = (
    "rotation_error",
    "rotation_angle",
    "residual",
    "covariance",
    "mag_scatter",
)

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

SENSOR_COLUMNS = ("t_s", "gx_rads", "gy_rads", "gz_rads", "ax", "ay", "az", "mx", "my", "mz")

_METRIC_OF_KIND = {
    "rotation_error": ("rot_err_deg", "rotation error [deg]"),
    "rotation_angle": ("rot_angle_deg", "rotation angle [deg]"),
    "residual": ("residual_norm", "innovation residual norm"),
    "covariance": ("p_trace", "trace(P)"),
}

_FIGSIZE = (8.0, 4.5)
_DPI = 110


class SchemaError(ValueError):
    """An input CSV does not match the documented schema."""


@dataclass(frozen=True)
class PlotSpec:
    """One figure: a kind, its input CSVs (one per mode) and the output path."""

    kind: str
    inputs: tuple[Path, ...]
    output: Path

    def __post_init__(self):
        if self.kind not in FIGURE_KINDS:
            raise ValueError(
                f"unknown figure kind {self.kind!r}; valid kinds: {', '.join(FIGURE_KINDS)}"
            )
        if not self.inputs:
            raise ValueError("a plot needs at least one input CSV")


def mode_label(path: Path) -> str:
    """Mode label from the filename, e.g. metrics_ekf2-triad.csv -> ekf2-triad."""
    stem = Path(path).stem
    return stem[len("metrics_"):] if stem.startswith("metrics_") else stem


def _read_csv(path: Path, expected: Sequence[str]) -> dict[str, np.ndarray]:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise SchemaError(f"cannot read {path}: {exc}") from exc
    header: list[str] | None = None
    rows: list[list[str]] = []
    for line in text.splitlines():
        if not line.strip() or line.startswith("#"):
            continue
        fields = next(csv.reader(io.StringIO(line)))
        if header is None:
            header = [f.strip() for f in fields]
            missing = [c for c in expected if c not in header]
            if missing:
                raise SchemaError(f"{path}: missing column '{missing[0]}'")
            continue
        rows.append(fields)
    if header is None:
        raise SchemaError(f"{path}: missing header row")
    if not rows:
        raise SchemaError(f"{path}: no data rows")
    data = np.empty((len(rows), len(expected)))
    index = [header.index(c) for c in expected]
    for i, fields in enumerate(rows):
        if len(fields) != len(header):
            raise SchemaError(f"{path}: row {i + 1} has {len(fields)} fields, expected {len(header)}")
        for j, col in enumerate(index):
            field = fields[col].strip()
            data[i, j] = float(field) if field else np.nan
    return {name: data[:, j] for j, name in enumerate(expected)}


def read_metrics(path: Path) -> dict[str, np.ndarray]:
    """Load a metrics CSV as named columns."""
    return _read_csv(path, METRICS_COLUMNS)


def read_sensor_log(path: Path) -> dict[str, np.ndarray]:
    """Load a sensor-log CSV as named columns."""
    return _read_csv(path, SENSOR_COLUMNS)


def _check_common_time_base(series: dict[str, dict[str, np.ndarray]]):
    lengths = {label: cols["t_s"].shape[0] for label, cols in series.items()}
    if len(set(lengths.values())) > 1:
        detail = ", ".join(f"{k}: {v} rows" for k, v in lengths.items())
        raise SchemaError(f"inputs do not share a time base ({detail})")
    reference = next(iter(series.values()))["t_s"]
    for label, cols in series.items():
        if np.abs(cols["t_s"] - reference).max() > 1e-9:
            raise SchemaError(f"inputs do not share a time base ({label} differs)")


def build_figure(spec: PlotSpec) -> "plt.Figure":
    """Assemble the matplotlib figure for a spec (not yet saved)."""
    if spec.kind == "mag_scatter":
        return _mag_scatter_figure(spec)
    column, ylabel = _METRIC_OF_KIND[spec.kind]
    series = {mode_label(p): read_metrics(p) for p in spec.inputs}
    _check_common_time_base(series)
    fig, ax = plt.subplots(figsize=_FIGSIZE, dpi=_DPI)
    for label, cols in series.items():
        ax.plot(cols["t_s"], cols[column], label=label, linewidth=1.0)
    ax.set_xlabel("time [s]")
    ax.set_ylabel(ylabel)
    if spec.kind in ("residual", "covariance"):
        ax.set_yscale("log")
    ax.grid(True, alpha=0.3)
    ax.legend(loc="upper right")
    fig.tight_layout()
    return fig


def _mag_scatter_figure(spec: PlotSpec) -> "plt.Figure":
    fig, axes = plt.subplots(1, 3, figsize=(10.5, 3.6), dpi=_DPI)
    planes = (("mx", "my"), ("mx", "mz"), ("my", "mz"))
    for path in spec.inputs:
        cols = read_sensor_log(path)
        label = mode_label(path)
        for ax, (u, v) in zip(axes, planes):
            ax.scatter(cols[u], cols[v], s=2.0, alpha=0.5, label=label)
    for ax, (u, v) in zip(axes, planes):
        ax.set_xlabel(u)
        ax.set_ylabel(v)
        ax.set_aspect("equal", adjustable="datalim")
        ax.grid(True, alpha=0.3)
    axes[0].legend(loc="upper right", markerscale=3.0)
    fig.tight_layout()
    return fig


def render(spec: PlotSpec) -> Path:
    """Render a spec to its output image and return the path."""
    fig = build_figure(spec)
    out = Path(spec.output)
    out.parent.mkdir(parents=True, exist_ok=True)
    # Strip the writer's software tag so identical inputs give identical bytes.
    fig.savefig(out, metadata={"Software": None} if out.suffix == ".png" else None)
    plt.close(fig)
    return out
