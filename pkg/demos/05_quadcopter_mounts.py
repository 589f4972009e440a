"""When the TRIAD aid helps and when it hurts: soft vs rigid mounting.

A stationary quadcopter steps its motors through RPMs.  Soft-mounted, the
magnetic disturbance dominates and the TRIAD aid wins.  Rigidly mounted,
motor vibration makes the accelerometer far noisier than the magnetometer;
since the TRIAD anchors on the accelerometer, the aid then feeds that noise
into the magnetic slot and performs slightly worse than the plain filter.

Run: python demos/05_quadcopter_mounts.py
"""

import numpy as np

from manifold_ahrs import load_config, run_scenario
from manifold_ahrs.config import with_seed
from manifold_ahrs.harness import metrics_column
from manifold_ahrs.presets import resolve_config_arg

SEEDS = range(100, 105)

for preset in ("experiment2-soft", "experiment2-hard"):
    cfg = load_config(resolve_config_arg(preset))
    means = {mode: [] for mode in cfg.modes}
    for seed in SEEDS:
        result = run_scenario(with_seed(cfg, seed))
        for mode, r in result.modes.items():
            means[mode].append(np.nanmean(metrics_column(r.metrics, "rot_err_deg")))
    print(f"{preset} (mean rotation error over {len(list(SEEDS))} seeds):")
    for mode, values in means.items():
        print(f"  {mode:>12}: {np.mean(values):6.3f} deg")
    better = "ekf2-triad" if np.mean(means["ekf2-triad"]) < np.mean(means["ekf2"]) else "ekf2"
    print(f"  -> {better} is the better estimator here\n")
