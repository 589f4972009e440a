"""Servo-bench rotation sequence with a scheduled magnetic disturbance.

Reproduces the bench comparison: a yaw/pitch/roll excursion sequence where
a hard-iron offset switches on for the pitch/roll portion (the bench's
servo magnets are excited by those motions, not by yaw).  Three estimators
consume the identical stream; the summary table shows the error ordering

    ekf2 (R_m = R_a)  >  ekf2 (R_m > R_a)  >  ekf2-triad

during the disturbed pitch/roll holds, and no difference on yaw holds.

Run: python demos/04_experiment1_bench.py          (about half a minute)
"""

from manifold_ahrs import load_config, run_scenario
from manifold_ahrs.harness import format_summary
from manifold_ahrs.presets import resolve_config_arg

cfg = load_config(resolve_config_arg("experiment1-disturbed"))
print(f"scenario: {cfg.name}, chart {cfg.chart}, {cfg.rate_hz:g} Hz, modes {', '.join(cfg.modes)}")
print("running...")
result = run_scenario(cfg)
print()
print(format_summary(result.modes, result.segments))
