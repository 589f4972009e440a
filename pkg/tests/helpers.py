"""Shared construction helpers for the test suite."""

import numpy as np

from manifold_ahrs.quat import normalize_quat


def random_unit_quat(rng):
    return normalize_quat(rng.standard_normal(4))


def random_unit_vec(rng):
    v = rng.standard_normal(3)
    return v / np.linalg.norm(v)


def random_small_rotation(rng, max_angle):
    from manifold_ahrs.quat import axis_angle

    return axis_angle(random_unit_vec(rng), rng.uniform(0.0, max_angle))
