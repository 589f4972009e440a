"""Command-line entry point: simulate, run, evaluate, calibrate.

Every subcommand is deterministic given its inputs; ``--seed`` is the only
entropy source.  Output files are never overwritten unless ``--force`` is
given.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np
import yaml

from .config import ConfigError, ScenarioConfig, load_config
from .harness import (
    LogFormatError,
    METRICS_COLUMNS,
    ModeResult,
    SegmentWindow,
    calibrate_references,
    format_summary,
    ingest_log,
    read_metrics_csv,
    run_scenario,
    summarize_mode,
    write_metrics_csv,
    write_sensor_log,
    write_truth_log,
)
from .presets import resolve_config_arg


class CliError(Exception):
    """User-facing failure; printed without a traceback."""


def _add_common_overrides(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--chart", help="chart override: orthographic|rodrigues|mrp|rotation-vector")
    parser.add_argument("--modes", help="comma-separated mode override, e.g. ekf2,ekf2-triad")
    parser.add_argument("--seed", type=int, help="random seed override")
    parser.add_argument("--triad-column", dest="triad_column", help="TRIAD column: c2|c3")
    parser.add_argument(
        "--init-error-deg",
        dest="init_error_deg",
        type=float,
        help="initial attitude error in degrees (convergence studies)",
    )


def _overrides_from_args(args: argparse.Namespace) -> dict:
    overrides: dict = {}
    if getattr(args, "chart", None) is not None:
        overrides["chart"] = args.chart
    if getattr(args, "modes", None) is not None:
        overrides["modes"] = [m.strip() for m in args.modes.split(",") if m.strip()]
    if getattr(args, "seed", None) is not None:
        overrides["seed"] = args.seed
    if getattr(args, "triad_column", None) is not None:
        overrides["triad_column"] = args.triad_column
    if getattr(args, "init_error_deg", None) is not None:
        overrides["init_error_deg"] = args.init_error_deg
    return overrides


def _load(args: argparse.Namespace) -> ScenarioConfig:
    try:
        path = resolve_config_arg(args.config)
    except FileNotFoundError as exc:
        raise CliError(str(exc)) from exc
    try:
        return load_config(path, overrides=_overrides_from_args(args))
    except ConfigError as exc:
        raise CliError(f"invalid config: {exc}") from exc


def _prepare_out(args: argparse.Namespace, filenames: list[str]) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    if not args.force:
        existing = [name for name in filenames if (out / name).exists()]
        if existing:
            raise CliError(
                f"refusing to overwrite {', '.join(existing)} in {out} (use --force)"
            )
    return out


def cmd_simulate(args: argparse.Namespace) -> int:
    """Write the sensor-log and ground-truth CSVs for a scenario."""
    cfg = _load(args)
    if cfg.segments is None:
        raise CliError("simulate needs a trajectory-based config, not input_log")
    out = _prepare_out(args, ["sensors.csv", "truth.csv"])
    result = run_scenario_inputs(cfg)
    write_sensor_log(out / "sensors.csv", result[0], cfg)
    write_truth_log(out / "truth.csv", result[1], cfg)
    print(f"wrote {out / 'sensors.csv'} and {out / 'truth.csv'} ({len(result[0])} samples)")
    return 0


def run_scenario_inputs(cfg: ScenarioConfig):
    """Generate (measurements, truth) for a trajectory config."""
    from .sim import generate_trajectory, synthesize_measurements

    truth = generate_trajectory(cfg.segments, cfg.rate_hz)
    measurements = synthesize_measurements(truth, cfg.refs, cfg.disturbance, cfg.seed)
    return measurements, truth


def cmd_run(args: argparse.Namespace) -> int:
    """Run all configured modes and write metrics CSVs plus a summary."""
    cfg = _load(args)
    filenames = [f"metrics_{mode}.csv" for mode in cfg.modes] + ["summary.txt"]
    out = _prepare_out(args, filenames)
    result = run_scenario(cfg)
    for mode, mode_result in result.modes.items():
        write_metrics_csv(out / f"metrics_{mode}.csv", mode_result, result.segments, cfg)
    summary = format_summary(result.modes, result.segments)
    (out / "summary.txt").write_text(summary + "\n")
    print(summary)
    failed = [m for m, r in result.modes.items() if r.failed]
    if failed:
        print(f"error: modes failed: {', '.join(failed)}", file=sys.stderr)
        return 1
    return 0


def cmd_evaluate(args: argparse.Namespace) -> int:
    """Recompute the summary table from persisted metrics CSVs."""
    modes: dict[str, ModeResult] = {}
    segments: list[SegmentWindow] = []
    row_counts: dict[str, int] = {}
    for path in args.metrics:
        try:
            mode, data, segs, _ = read_metrics_csv(Path(path))
        except LogFormatError as exc:
            raise CliError(str(exc)) from exc
        if segs and not segments:
            segments = segs
        row_counts[str(path)] = data.shape[0]
        result = ModeResult(mode=mode, metrics=data)
        result.segment_stats = summarize_mode(data, segs or segments)
        modes[mode] = result
    counts = set(row_counts.values())
    if len(counts) > 1:
        detail = ", ".join(f"{p}: {n} rows" for p, n in row_counts.items())
        raise CliError(f"metrics row-count mismatch across inputs ({detail})")
    if not segments:
        raise CliError("no segment metadata found in the metrics files")
    summary = format_summary(modes, segments)
    print(summary)
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        target = out / "summary.txt"
        if target.exists() and not args.force:
            raise CliError(f"refusing to overwrite {target} (use --force)")
        target.write_text(summary + "\n")
    return 0


def cmd_calibrate(args: argparse.Namespace) -> int:
    """Derive reference vectors from a static sensor log."""
    try:
        stream = ingest_log(Path(args.log))
        refs = calibrate_references(stream)
    except (LogFormatError, ValueError) as exc:
        raise CliError(str(exc)) from exc
    doc = {
        "references": {
            "a_r": [float(v) for v in refs.a_r],
            "m_r": [float(v) for v in refs.m_r],
        }
    }
    text = yaml.safe_dump(doc, sort_keys=False)
    print(text, end="")
    print(f"# c2r: {np.array2string(refs.c2r, precision=6)}")
    print(f"# c3r: {np.array2string(refs.c3r, precision=6)}")
    if args.out:
        out = Path(args.out)
        if out.exists() and not args.force:
            raise CliError(f"refusing to overwrite {out} (use --force)")
        out.parent.mkdir(parents=True, exist_ok=True)
        out.write_text(text)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="manifold-ahrs",
        description="Quaternion-manifold attitude estimation: simulate, run, evaluate, calibrate.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_sim = sub.add_parser("simulate", help="write sensor and truth CSVs from a scenario")
    p_sim.add_argument("--config", required=True, help="scenario YAML path or preset name")
    p_sim.add_argument("--out", required=True, help="output directory")
    p_sim.add_argument("--force", action="store_true", help="overwrite existing outputs")
    _add_common_overrides(p_sim)
    p_sim.set_defaults(func=cmd_simulate)

    p_run = sub.add_parser("run", help="run filter modes and write metrics + summary")
    p_run.add_argument("--config", required=True, help="scenario YAML path or preset name")
    p_run.add_argument("--out", required=True, help="output directory")
    p_run.add_argument("--force", action="store_true", help="overwrite existing outputs")
    _add_common_overrides(p_run)
    p_run.set_defaults(func=cmd_run)

    p_eval = sub.add_parser("evaluate", help="recompute a summary from metrics CSVs")
    p_eval.add_argument("metrics", nargs="+", help="metrics CSV files (one per mode)")
    p_eval.add_argument("--out", help="directory to write summary.txt into")
    p_eval.add_argument("--force", action="store_true", help="overwrite existing outputs")
    p_eval.set_defaults(func=cmd_evaluate)

    p_cal = sub.add_parser("calibrate", help="derive reference vectors from a static log")
    p_cal.add_argument("--log", required=True, help="static sensor-log CSV")
    p_cal.add_argument("--out", help="write a references YAML snippet here")
    p_cal.add_argument("--force", action="store_true", help="overwrite existing outputs")
    p_cal.set_defaults(func=cmd_calibrate)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
