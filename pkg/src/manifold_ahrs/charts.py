"""Charts mapping attitude deviations between the quaternion manifold and R^3.

Four charts are provided: orthographic, Rodrigues parameters, modified
Rodrigues parameters (MRP) and the rotation vector.  All use a common
scaling chosen so the chart acts as the identity to first order at the
chart center: for a small deviation of angle ``theta`` about ``axis`` every
chart returns approximately ``theta * axis``.  That shared first-order
behaviour is what lets the filter use one measurement Jacobian for every
chart.

Coordinates are always taken for the deviation ``delta = qbar^* * q`` with
``delta0 >= 0`` (the short arc of the double cover); the forward map flips
the sign of ``delta`` when needed.
"""

from __future__ import annotations

import numpy as np
from numpy.typing import ArrayLike, NDArray

from .quat import conjugate, normalize_quat, quat_product

CHART_KINDS = ("orthographic", "rodrigues", "mrp", "rotation-vector")

# Radial clamp applied by `saturate` stops this far inside each boundary so
# the inverse map's square roots stay real.
SATURATION_MARGIN = 1e-6

# Chart image radii for saturation; None means the image is all of R^3.
_IMAGE_RADIUS: dict[str, float | None] = {
    "orthographic": 2.0,
    "rodrigues": None,
    "mrp": 4.0,
    "rotation-vector": np.pi,
}


class ChartDomainError(ValueError):
    """A chart point lies outside the chart's image (missing saturation)."""


def validate_chart(kind: str) -> str:
    """Return ``kind`` if it names a chart, else raise with the valid names."""
    if kind not in CHART_KINDS:
        raise ValueError(f"unknown chart {kind!r}; valid charts: {', '.join(CHART_KINDS)}")
    return kind


def chart_forward(kind: str, delta: ArrayLike) -> NDArray[np.float64]:
    """Map a deviation quaternion to chart coordinates in R^3."""
    validate_chart(kind)
    delta = np.asarray(delta, dtype=float)
    if delta[0] < 0.0:
        delta = -delta
    d0 = delta[0]
    dv = delta[1:]
    if kind == "orthographic":
        return 2.0 * dv
    if kind == "rodrigues":
        return 2.0 * dv / d0
    if kind == "mrp":
        return 4.0 * dv / (1.0 + d0)
    # rotation-vector
    s = np.sqrt(dv @ dv)
    if s < 1e-9:
        # angle/|dv| -> 2 as the deviation vanishes
        return 2.0 * dv
    # atan2 keeps full precision near the identity, where arccos(d0) loses
    # half the significant digits.
    return 2.0 * np.arctan2(s, d0) * dv / s


def chart_inverse(kind: str, e: ArrayLike) -> NDArray[np.float64]:
    """Map chart coordinates back to a unit deviation quaternion.

    Raises
    ------
    ChartDomainError
        For orthographic coordinates with ``|e| > 2``, which signals that a
        caller skipped `saturate`.
    """
    validate_chart(kind)
    e = np.asarray(e, dtype=float)
    n2 = float(e @ e)
    out = np.empty(4)
    if kind == "orthographic":
        if n2 > 4.0:
            raise ChartDomainError(
                f"orthographic coordinates |e| = {np.sqrt(n2):.6g} exceed the "
                "chart image (|e| <= 2); saturate before inverting"
            )
        out[0] = np.sqrt(max(1.0 - 0.25 * n2, 0.0))
        out[1:] = 0.5 * e
    elif kind == "rodrigues":
        scale = 1.0 / np.sqrt(4.0 + n2)
        out[0] = 2.0 * scale
        out[1:] = e * scale
    elif kind == "mrp":
        denom = 16.0 + n2
        out[0] = (16.0 - n2) / denom
        out[1:] = 8.0 * e / denom
    else:  # rotation-vector
        n = np.sqrt(n2)
        out[0] = np.cos(0.5 * n)
        if n < 1e-9:
            out[1:] = 0.5 * e
        else:
            out[1:] = np.sin(0.5 * n) * e / n
    # The closed forms are unit up to rounding; renormalize in place.
    return out / np.sqrt(out @ out)


def saturate(kind: str, e_raw: ArrayLike) -> NDArray[np.float64]:
    """Clamp a raw update radially into the chart's image.

    Points already inside the image are returned unchanged; points outside
    are scaled onto the boundary minus `SATURATION_MARGIN`.
    """
    validate_chart(kind)
    e = np.asarray(e_raw, dtype=float)
    radius = _IMAGE_RADIUS[kind]
    if radius is None:
        return e
    n = np.sqrt(e @ e)
    if n <= radius - SATURATION_MARGIN:
        return e
    return e * ((radius - SATURATION_MARGIN) / n)


def centered_chart_inverse(qbar: ArrayLike, kind: str, e: ArrayLike) -> NDArray[np.float64]:
    """Map coordinates of the ``qbar``-centered chart to the manifold.

    Returns ``qbar * chart_inverse(kind, e)``, renormalized.  The chart
    origin ``e = 0`` maps to ``qbar`` itself.
    """
    return quat_product(qbar, chart_inverse(kind, e))


def centered_chart_forward(qbar: ArrayLike, kind: str, q: ArrayLike) -> NDArray[np.float64]:
    """Coordinates of ``q`` in the ``qbar``-centered chart."""
    return chart_forward(kind, quat_product(conjugate(qbar), q))
