"""TRIAD attitude determination from two body-frame direction measurements.

The TRIAD frame is deliberately suboptimal: the first vector (the anchor,
here the accelerometer direction) is used exactly, while the component of
the second vector along the anchor is discarded.  That discard is the
feature this package exploits: feeding the filter's magnetic slot with the
third TRIAD column decouples roll/pitch estimation from magnetometer
disturbance.
"""

from __future__ import annotations

from typing import NamedTuple

import numpy as np
from numpy.typing import ArrayLike, NDArray

# Below this cross-product norm the two directions are treated as parallel
# and no frame is defined.
DEGENERACY_THRESHOLD = 1e-6


def _cross3(a: NDArray[np.float64], b: NDArray[np.float64]) -> NDArray[np.float64]:
    # np.cross carries broadcasting overhead that dominates at this size.
    return np.array(
        [
            a[1] * b[2] - a[2] * b[1],
            a[2] * b[0] - a[0] * b[2],
            a[0] * b[1] - a[1] * b[0],
        ]
    )

TRIAD_COLUMNS = ("c2", "c3")


class TriadDegenerateError(ValueError):
    """The two observation directions are too close to parallel."""


class TriadFrame(NamedTuple):
    """Right-handed orthonormal triad built from two observations."""

    c1: NDArray[np.float64]
    c2: NDArray[np.float64]
    c3: NDArray[np.float64]

    @property
    def rotation(self) -> NDArray[np.float64]:
        """Rotation matrix with the triad vectors as columns."""
        return np.column_stack([self.c1, self.c2, self.c3])


def triad(z_a: ArrayLike, z_m: ArrayLike) -> TriadFrame:
    """Build the TRIAD frame anchored at ``z_a``.

    ``c1 = z_a``, ``c2 = (z_a x z_m) / |z_a x z_m|``, ``c3 = c1 x c2``.
    The anchor is used exactly: ``c1`` does not depend on ``z_m`` at all.

    Raises
    ------
    TriadDegenerateError
        If ``|z_a x z_m| <= DEGENERACY_THRESHOLD`` (directions parallel,
        e.g. the magnetic field aligned with gravity).
    """
    c1 = np.asarray(z_a, dtype=float)
    z_m = np.asarray(z_m, dtype=float)
    if c1.shape != (3,) or z_m.shape != (3,):
        raise ValueError("triad inputs must be 3-vectors")
    cross = _cross3(c1, z_m)
    norm = np.sqrt(cross @ cross)
    # A NaN norm fails this comparison too, so non-finite input cannot pass.
    if not norm > DEGENERACY_THRESHOLD:
        raise TriadDegenerateError(
            f"observation directions nearly parallel (|z_a x z_m| = {norm:.3g})"
        )
    c2 = cross / norm
    return TriadFrame(c1, c2, _cross3(c1, c2))


def triad_measurement(z_a: ArrayLike, z_m: ArrayLike, column: str = "c3") -> NDArray[np.float64]:
    """TRIAD-derived direction fed to the filter's magnetic slot.

    Returns the third triad column by default; ``column="c2"`` selects the
    second-column variant.  Raises `TriadDegenerateError` as `triad` does.
    """
    if column not in TRIAD_COLUMNS:
        raise ValueError(f"triad column must be one of {TRIAD_COLUMNS}, got {column!r}")
    frame = triad(z_a, z_m)
    return frame.c3 if column == "c3" else frame.c2
