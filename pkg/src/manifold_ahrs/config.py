"""Scenario configuration: a single YAML file describing a run end to end.

A scenario either declares a trajectory plus a disturbance model (simulated
input) or points at a sensor log (ingested input).  Unknown keys are
rejected with their full dotted path so typos cannot silently change a run.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Optional

import numpy as np
import yaml

from .charts import CHART_KINDS, validate_chart
from .mekf import NoiseParams, ReferenceVectors
from .quat import axis_angle, identity_quat, normalize_quat
from .sim import DisturbanceModel, TrajectorySegment, Vibration, hold, slew
from .triad import TRIAD_COLUMNS

# Mode labels the harness understands.  "ekf2-rm-gt-ra" is the plain
# two-vector filter with the magnetometer trusted less than the
# accelerometer (R_m = 0.05 I by default instead of 0.01 I).
MODE_LABELS = ("ekf1", "ekf2", "ekf2-rm-gt-ra", "ekf2-triad")

_NOISE_KEYS = ("q_omega", "r_omega", "r_a", "r_m")
_DEFAULT_NOISE = {"q_omega": 10.0, "r_omega": 0.001, "r_a": 0.01, "r_m": 0.01}
_RM_GT_RA_OVERRIDE = {"r_m": 0.05}


class ConfigError(ValueError):
    """A scenario file failed validation; the message carries the key path."""


def filter_mode_of(label: str) -> str:
    """Map a harness mode label to the filter's measurement-set mode."""
    if label == "ekf2-rm-gt-ra":
        return "ekf2"
    return label


def canonical_mode(label: str) -> str:
    """Normalize a mode name (case, underscores) to its canonical label."""
    norm = str(label).strip().lower().replace("_", "-")
    if norm == "ekf2-rm-gt-ra" or norm == "ekf2-rmgtra":
        norm = "ekf2-rm-gt-ra"
    if norm not in MODE_LABELS:
        raise ConfigError(
            f"unknown mode {label!r}; valid modes: {', '.join(MODE_LABELS)}"
        )
    return norm


@dataclass
class ScenarioConfig:
    """A fully resolved scenario ready for the harness."""

    chart: str
    rate_hz: float
    seed: int
    triad_column: str
    modes: tuple[str, ...]
    refs: ReferenceVectors
    noise: dict[str, NoiseParams]
    segments: Optional[list[TrajectorySegment]] = None
    disturbance: Optional[DisturbanceModel] = None
    input_log: Optional[Path] = None
    truth_log: Optional[Path] = None
    init_error_deg: float = 0.0
    p0: float = 0.1
    name: str = "scenario"
    raw: dict = field(default_factory=dict)


def _require_keys(mapping: dict, allowed: set[str], path: str) -> None:
    if not isinstance(mapping, dict):
        raise ConfigError(f"{path}: expected a mapping, got {type(mapping).__name__}")
    for key in mapping:
        if key not in allowed:
            full = f"{path}.{key}" if path else str(key)
            raise ConfigError(f"unknown key '{full}'")


def _as_float(value: Any, path: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{path}: expected a number, got {value!r}")
    return float(value)


def _as_vec3(value: Any, path: str) -> np.ndarray:
    if not isinstance(value, (list, tuple)) or len(value) != 3:
        raise ConfigError(f"{path}: expected a 3-element list, got {value!r}")
    return np.array([_as_float(v, path) for v in value])


def _parse_target(value: Any, path: str) -> np.ndarray:
    """A target orientation: 'identity', [w,x,y,z], or {axis, angle_deg}."""
    if value == "identity":
        return identity_quat()
    if isinstance(value, (list, tuple)):
        if len(value) != 4:
            raise ConfigError(f"{path}: quaternion targets need 4 components")
        try:
            return normalize_quat(np.array([_as_float(v, path) for v in value]))
        except ValueError as exc:
            raise ConfigError(f"{path}: {exc}") from exc
    if isinstance(value, dict):
        _require_keys(value, {"axis", "angle_deg"}, path)
        if "axis" not in value or "angle_deg" not in value:
            raise ConfigError(f"{path}: axis-angle targets need 'axis' and 'angle_deg'")
        axis = _as_vec3(value["axis"], f"{path}.axis")
        norm = np.linalg.norm(axis)
        if norm < 1e-12:
            raise ConfigError(f"{path}.axis: zero axis")
        angle = np.radians(_as_float(value["angle_deg"], f"{path}.angle_deg"))
        return axis_angle(axis / norm, angle)
    raise ConfigError(f"{path}: cannot interpret target {value!r}")


def _parse_segments(entries: Any, path: str) -> list[TrajectorySegment]:
    if not isinstance(entries, list) or not entries:
        raise ConfigError(f"{path}: expected a non-empty list of segments")
    segments: list[TrajectorySegment] = []
    q_cur = identity_quat()
    for i, entry in enumerate(entries):
        epath = f"{path}[{i}]"
        if not isinstance(entry, dict):
            raise ConfigError(f"{epath}: expected a mapping")
        if "hold" in entry:
            _require_keys(entry, {"hold", "duration_s"}, epath)
            if "duration_s" not in entry:
                raise ConfigError(f"{epath}: holds need duration_s")
            target = _parse_target(entry["hold"], f"{epath}.hold")
            try:
                seg = hold(target, _as_float(entry["duration_s"], f"{epath}.duration_s"))
            except ValueError as exc:
                raise ConfigError(f"{epath}: {exc}") from exc
        elif "slew" in entry:
            _require_keys(entry, {"slew", "rate_dps", "duration_s"}, epath)
            has_rate = "rate_dps" in entry
            has_duration = "duration_s" in entry
            if has_rate == has_duration:
                raise ConfigError(f"{epath}: slews need exactly one of rate_dps or duration_s")
            target = _parse_target(entry["slew"], f"{epath}.slew")
            try:
                if has_rate:
                    rate = np.radians(_as_float(entry["rate_dps"], f"{epath}.rate_dps"))
                    seg = slew(q_cur, target, rate=rate)
                else:
                    seg = slew(
                        q_cur, target, duration=_as_float(entry["duration_s"], f"{epath}.duration_s")
                    )
            except ValueError as exc:
                raise ConfigError(f"{epath}: {exc}") from exc
        else:
            raise ConfigError(f"{epath}: segment needs a 'hold' or 'slew' key")
        segments.append(seg)
        q_cur = seg.target
    return segments


def _parse_references(value: Any, path: str) -> ReferenceVectors:
    _require_keys(value, {"a_r", "m_r", "inclination_deg", "declination_deg"}, path)
    has_mr = "m_r" in value
    has_inc = "inclination_deg" in value
    if has_mr == has_inc:
        raise ConfigError(f"{path}: give either m_r or inclination_deg (not both)")
    try:
        if has_inc:
            return ReferenceVectors.from_inclination(
                _as_float(value["inclination_deg"], f"{path}.inclination_deg"),
                _as_float(value.get("declination_deg", 0.0), f"{path}.declination_deg"),
                a_r=_as_vec3(value["a_r"], f"{path}.a_r") if "a_r" in value else (0.0, 0.0, -1.0),
            )
        if "declination_deg" in value:
            raise ConfigError(f"{path}: declination_deg only applies with inclination_deg")
        return ReferenceVectors.make(
            _as_vec3(value["a_r"], f"{path}.a_r") if "a_r" in value else (0.0, 0.0, -1.0),
            _as_vec3(value["m_r"], f"{path}.m_r"),
        )
    except ValueError as exc:
        raise ConfigError(f"{path}: {exc}") from exc


def _parse_disturbance(value: Any, path: str) -> DisturbanceModel:
    allowed = {
        "hard_iron",
        "soft_iron",
        "mag_noise_std",
        "accel_noise_std",
        "gyro_noise_std",
        "vibration",
        "schedule",
    }
    _require_keys(value, allowed, path)
    kwargs: dict[str, Any] = {}
    if "hard_iron" in value:
        kwargs["hard_iron"] = _as_vec3(value["hard_iron"], f"{path}.hard_iron")
    if "soft_iron" in value:
        rows = value["soft_iron"]
        if not isinstance(rows, list) or len(rows) != 3:
            raise ConfigError(f"{path}.soft_iron: expected three rows")
        kwargs["soft_iron"] = np.array(
            [_as_vec3(row, f"{path}.soft_iron[{i}]") for i, row in enumerate(rows)]
        )
    for key in ("mag_noise_std", "accel_noise_std", "gyro_noise_std"):
        if key in value:
            kwargs[key] = _as_float(value[key], f"{path}.{key}")
    if "vibration" in value:
        vib = value["vibration"]
        _require_keys(vib, {"amplitude", "freq_hz"}, f"{path}.vibration")
        if "amplitude" not in vib or "freq_hz" not in vib:
            raise ConfigError(f"{path}.vibration: needs amplitude and freq_hz")
        kwargs["vibration"] = Vibration(
            amplitude=_as_float(vib["amplitude"], f"{path}.vibration.amplitude"),
            freq_hz=_as_float(vib["freq_hz"], f"{path}.vibration.freq_hz"),
        )
    if "schedule" in value:
        entries = value["schedule"]
        if not isinstance(entries, list):
            raise ConfigError(f"{path}.schedule: expected a list of [t_start_s, scale]")
        sched = []
        for i, entry in enumerate(entries):
            if not isinstance(entry, (list, tuple)) or len(entry) != 2:
                raise ConfigError(f"{path}.schedule[{i}]: expected [t_start_s, scale]")
            sched.append(
                (
                    _as_float(entry[0], f"{path}.schedule[{i}][0]"),
                    _as_float(entry[1], f"{path}.schedule[{i}][1]"),
                )
            )
        kwargs["schedule"] = tuple(sched)
    try:
        return DisturbanceModel(**kwargs)
    except ValueError as exc:
        raise ConfigError(f"{path}: {exc}") from exc


def _parse_noise(value: Any, modes: tuple[str, ...], path: str) -> dict[str, NoiseParams]:
    """Per-mode noise: 'default' scalars overlaid by per-mode overrides.

    The rm-gt-ra mode gets its defining ``r_m = 0.05`` unless the file
    overrides it explicitly.
    """
    allowed = {"default", *MODE_LABELS}
    if value is None:
        value = {}
    _require_keys(value, allowed, path)
    base = dict(_DEFAULT_NOISE)
    if "default" in value:
        _require_keys(value["default"], set(_NOISE_KEYS), f"{path}.default")
        for key, v in value["default"].items():
            base[key] = _as_float(v, f"{path}.default.{key}")
    out: dict[str, NoiseParams] = {}
    for mode in modes:
        params = dict(base)
        if mode == "ekf2-rm-gt-ra":
            params.update(_RM_GT_RA_OVERRIDE)
        if mode in value:
            _require_keys(value[mode], set(_NOISE_KEYS), f"{path}.{mode}")
            for key, v in value[mode].items():
                params[key] = _as_float(v, f"{path}.{mode}.{key}")
        try:
            out[mode] = NoiseParams.from_scalars(**params)
        except ValueError as exc:
            raise ConfigError(f"{path}.{mode}: {exc}") from exc
    return out


_TOP_KEYS = {
    "name",
    "chart",
    "rate_hz",
    "seed",
    "triad_column",
    "modes",
    "references",
    "noise",
    "trajectory",
    "disturbance",
    "input_log",
    "truth_log",
    "init_error_deg",
    "p0",
}


def parse_config(mapping: dict, base_dir: Path | None = None, name: str = "scenario") -> ScenarioConfig:
    """Validate a raw mapping and resolve it into a `ScenarioConfig`."""
    _require_keys(mapping, _TOP_KEYS, "")
    base_dir = Path(base_dir) if base_dir is not None else Path.cwd()

    chart = str(mapping.get("chart", "mrp"))
    try:
        validate_chart(chart)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc

    triad_column = str(mapping.get("triad_column", "c3"))
    if triad_column not in TRIAD_COLUMNS:
        raise ConfigError(
            f"triad_column: must be one of {', '.join(TRIAD_COLUMNS)}, got {triad_column!r}"
        )

    modes_raw = mapping.get("modes", ["ekf2"])
    if not isinstance(modes_raw, list) or not modes_raw:
        raise ConfigError("modes: expected a non-empty list")
    modes = tuple(canonical_mode(m) for m in modes_raw)
    if len(set(modes)) != len(modes):
        raise ConfigError("modes: duplicate entries")

    if "references" not in mapping:
        raise ConfigError("missing required key 'references'")
    refs = _parse_references(mapping["references"], "references")
    noise = _parse_noise(mapping.get("noise"), modes, "noise")

    has_trajectory = "trajectory" in mapping
    has_log = "input_log" in mapping
    if has_trajectory == has_log:
        raise ConfigError("give exactly one of 'trajectory' or 'input_log'")

    segments = None
    disturbance = None
    input_log = None
    truth_log = None
    if has_trajectory:
        traj = mapping["trajectory"]
        _require_keys(traj, {"segments"}, "trajectory")
        if "segments" not in traj:
            raise ConfigError("trajectory: missing 'segments'")
        segments = _parse_segments(traj["segments"], "trajectory.segments")
        disturbance = (
            _parse_disturbance(mapping["disturbance"], "disturbance")
            if "disturbance" in mapping
            else DisturbanceModel()
        )
        if "truth_log" in mapping:
            raise ConfigError("truth_log only applies with input_log")
    else:
        if "disturbance" in mapping:
            raise ConfigError("disturbance only applies with a simulated trajectory")
        input_log = (base_dir / str(mapping["input_log"])).resolve()
        if not input_log.is_file():
            raise ConfigError(f"input_log: file not found: {input_log}")
        if "truth_log" in mapping:
            truth_log = (base_dir / str(mapping["truth_log"])).resolve()
            if not truth_log.is_file():
                raise ConfigError(f"truth_log: file not found: {truth_log}")

    rate_hz = _as_float(mapping.get("rate_hz", 500.0), "rate_hz")
    if rate_hz <= 0.0:
        raise ConfigError("rate_hz: must be positive")
    seed = mapping.get("seed", 0)
    if isinstance(seed, bool) or not isinstance(seed, int):
        raise ConfigError(f"seed: expected an integer, got {seed!r}")
    init_error_deg = _as_float(mapping.get("init_error_deg", 0.0), "init_error_deg")
    p0 = _as_float(mapping.get("p0", 0.1), "p0")
    if p0 < 0.0:
        raise ConfigError("p0: must be nonnegative")

    return ScenarioConfig(
        chart=chart,
        rate_hz=rate_hz,
        seed=seed,
        triad_column=triad_column,
        modes=modes,
        refs=refs,
        noise=noise,
        segments=segments,
        disturbance=disturbance,
        input_log=input_log,
        truth_log=truth_log,
        init_error_deg=init_error_deg,
        p0=p0,
        name=str(mapping.get("name", name)),
        raw=mapping,
    )


def load_config(path: str | Path, overrides: dict | None = None) -> ScenarioConfig:
    """Load and validate a scenario YAML file.

    ``overrides`` (e.g. from command-line flags) are applied to the raw
    mapping before validation, so the echoed configuration reflects them.
    """
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    try:
        mapping = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"{path}: invalid YAML: {exc}") from exc
    if not isinstance(mapping, dict):
        raise ConfigError(f"{path}: top level must be a mapping")
    if overrides:
        mapping = {**mapping, **{k: v for k, v in overrides.items() if v is not None}}
    return parse_config(mapping, base_dir=path.parent, name=path.stem)


def with_seed(cfg: ScenarioConfig, seed: int) -> ScenarioConfig:
    """Copy of ``cfg`` with a different seed (raw echo updated to match)."""
    raw = dict(cfg.raw)
    raw["seed"] = seed
    return replace(cfg, seed=seed, raw=raw)
