import numpy as np
import pytest

from helpers import random_unit_vec
from manifold_ahrs.charts import (
    CHART_KINDS,
    ChartDomainError,
    SATURATION_MARGIN,
    centered_chart_forward,
    centered_chart_inverse,
    chart_forward,
    chart_inverse,
    saturate,
    validate_chart,
)
from manifold_ahrs.quat import (
    axis_angle,
    conjugate,
    identity_quat,
    quat_product,
    rotation_error,
)

EX = np.array([1.0, 0.0, 0.0])
EZ = np.array([0.0, 0.0, 1.0])

# Largest deviation angle each chart must round-trip (radians).
ROUND_TRIP_CAP = {
    "orthographic": np.pi / 2,
    "rodrigues": np.radians(170.0),
    "mrp": np.radians(170.0),
    "rotation-vector": np.radians(170.0),
}


def quat_gap(a, b):
    """Max component difference up to the double-cover sign."""
    return min(np.abs(a - b).max(), np.abs(a + b).max())


@pytest.mark.parametrize("kind", CHART_KINDS)
def test_forward_at_identity_is_origin(kind):
    np.testing.assert_array_equal(chart_forward(kind, identity_quat()), np.zeros(3))


def test_orthographic_forward_known_value():
    # 2*sin(0.1) for a 0.2 rad deviation about z; the rotation-vector chart
    # returns the angle itself.
    e = chart_forward("orthographic", axis_angle(EZ, 0.2))
    np.testing.assert_allclose(e, [0.0, 0.0, 2.0 * np.sin(0.1)], atol=1e-15)
    np.testing.assert_allclose(e[2], 0.19966683329365417, atol=1e-15)
    e_rv = chart_forward("rotation-vector", axis_angle(EZ, 0.2))
    np.testing.assert_allclose(e_rv, [0.0, 0.0, 0.2], atol=1e-15)


@pytest.mark.parametrize("kind", CHART_KINDS)
def test_forward_near_identity_flat(kind):
    e = chart_forward(kind, axis_angle(EX, 1e-6))
    np.testing.assert_allclose(e, [1e-6, 0.0, 0.0], atol=1e-12)


@pytest.mark.parametrize("kind", CHART_KINDS)
def test_forward_handles_double_cover(kind):
    delta = axis_angle(random_unit_vec(np.random.default_rng(1)), 0.8)
    np.testing.assert_array_equal(chart_forward(kind, -delta), chart_forward(kind, delta))


@pytest.mark.parametrize("kind", CHART_KINDS)
def test_inverse_at_origin_is_identity(kind):
    np.testing.assert_allclose(chart_inverse(kind, np.zeros(3)), identity_quat(), atol=1e-15)


def test_rotation_vector_inverse_half_turn():
    np.testing.assert_allclose(
        chart_inverse("rotation-vector", np.array([0.0, 0.0, np.pi])),
        [0.0, 0.0, 0.0, 1.0],
        atol=1e-15,
    )


@pytest.mark.parametrize("kind", CHART_KINDS)
def test_round_trips(kind):
    rng = np.random.default_rng(101)
    cap = ROUND_TRIP_CAP[kind]
    for _ in range(1000):
        delta = axis_angle(random_unit_vec(rng), rng.uniform(0.0, cap))
        e = chart_forward(kind, delta)
        # inverse-of-forward reproduces the deviation as a rotation
        assert quat_gap(chart_inverse(kind, e), delta) <= 1e-9
        # forward-of-inverse reproduces the chart point
        e2 = chart_forward(kind, chart_inverse(kind, e))
        assert np.abs(e2 - e).max() <= 1e-9


@pytest.mark.parametrize("kind", CHART_KINDS)
def test_near_identity_flatness_bound(kind):
    # Testable form of the charts acting as identity transformations near
    # the center: at theta <= 1e-3 the coordinates equal theta*axis to 1e-8.
    rng = np.random.default_rng(23)
    for _ in range(100):
        axis = random_unit_vec(rng)
        theta = rng.uniform(0.0, 1e-3)
        e = chart_forward(kind, axis_angle(axis, theta))
        assert np.linalg.norm(e - theta * axis) <= 1e-8


@pytest.mark.parametrize("kind", CHART_KINDS)
def test_inverse_jacobian_at_origin_is_half_identity(kind):
    h = 1e-4
    J = np.empty((3, 3))
    for j in range(3):
        step = np.zeros(3)
        step[j] = h
        J[:, j] = (chart_inverse(kind, step)[1:] - chart_inverse(kind, -step)[1:]) / (2 * h)
    np.testing.assert_allclose(J, 0.5 * np.eye(3), atol=1e-6)


class TestSaturate:
    def test_orthographic_radial_clamp(self):
        e = saturate("orthographic", np.array([3.0, 0.0, 0.0]))
        np.testing.assert_allclose(e, [2.0 - SATURATION_MARGIN, 0.0, 0.0], atol=1e-15)

    def test_rodrigues_unbounded(self):
        e = np.array([100.0, 0.0, 0.0])
        np.testing.assert_array_equal(saturate("rodrigues", e), e)

    def test_rotation_vector_principal_branch(self):
        e = saturate("rotation-vector", np.array([4.0, 0.0, 0.0]))
        np.testing.assert_allclose(e, [np.pi - SATURATION_MARGIN, 0.0, 0.0], atol=1e-15)

    def test_mrp_clamped_to_short_arc_branch(self):
        e = saturate("mrp", np.array([0.0, 5.0, 0.0]))
        np.testing.assert_allclose(e, [0.0, 4.0 - SATURATION_MARGIN, 0.0], atol=1e-15)
        # inside the image nothing changes
        inside = np.array([0.0, 3.9, 0.0])
        np.testing.assert_array_equal(saturate("mrp", inside), inside)

    def test_inside_points_untouched(self):
        rng = np.random.default_rng(3)
        for kind in CHART_KINDS:
            e = 0.5 * random_unit_vec(rng)
            np.testing.assert_array_equal(saturate(kind, e), e)


def test_orthographic_inverse_outside_image_raises():
    with pytest.raises(ChartDomainError, match="saturate"):
        chart_inverse("orthographic", np.array([2.5, 0.0, 0.0]))


def test_unknown_chart_rejected_with_valid_names():
    with pytest.raises(ValueError, match="mrp"):
        validate_chart("euler")


class TestCenteredCharts:
    def test_origin_maps_to_reference(self):
        rng = np.random.default_rng(31)
        from helpers import random_unit_quat

        qbar = random_unit_quat(rng)
        for kind in CHART_KINDS:
            assert rotation_error(centered_chart_inverse(qbar, kind, np.zeros(3)), qbar) < 1e-12

    def test_identity_center_reduces_to_plain_inverse(self):
        e = np.array([0.1, -0.2, 0.05])
        for kind in CHART_KINDS:
            np.testing.assert_allclose(
                centered_chart_inverse(identity_quat(), kind, e),
                chart_inverse(kind, e),
                atol=1e-15,
            )

    def test_composition_round_trip(self):
        # centered_chart_inverse(qbar, k, forward(conj(qbar) * q)) == q
        rng = np.random.default_rng(37)
        from helpers import random_unit_quat

        for kind in CHART_KINDS:
            for _ in range(250):
                qbar = random_unit_quat(rng)
                dev = axis_angle(random_unit_vec(rng), rng.uniform(0.0, np.pi / 2 - 1e-6))
                q = quat_product(qbar, dev)
                e = chart_forward(kind, quat_product(conjugate(qbar), q))
                assert rotation_error(centered_chart_inverse(qbar, kind, e), q) <= 1e-9

    def test_centered_forward_inverse_pair(self):
        rng = np.random.default_rng(41)
        from helpers import random_unit_quat

        qbar = random_unit_quat(rng)
        q = quat_product(qbar, axis_angle(random_unit_vec(rng), 0.4))
        for kind in CHART_KINDS:
            e = centered_chart_forward(qbar, kind, q)
            assert rotation_error(centered_chart_inverse(qbar, kind, e), q) <= 1e-9
