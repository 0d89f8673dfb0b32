"""Quaternion algebra and the pose distortion."""

import numpy as np
import pytest

from sempose import geometry as geo
from sempose.errors import DegenerateInputError


def random_unit_quat(rng):
    return geo.quat_normalize(rng.normal(size=4))


def rotate_quat_about_axis(q, axis, angle):
    axis = np.asarray(axis, dtype=float)
    axis = axis / np.linalg.norm(axis)
    return geo.quat_mul(geo.rotvec_to_quat(axis * angle), q)


def test_rotvec_to_quat_identity():
    assert np.allclose(geo.rotvec_to_quat([0.0, 0.0, 0.0]), [1, 0, 0, 0])


def test_rotvec_to_quat_pi_about_x():
    q = geo.rotvec_to_quat([np.pi, 0.0, 0.0])
    assert np.allclose(q, [0, 1, 0, 0], atol=1e-12)


def test_rotvec_quat_roundtrip_1000_random():
    rng = np.random.default_rng(0)
    for _ in range(1000):
        v = rng.normal(size=3)
        n = np.linalg.norm(v)
        if n > np.pi:
            v *= rng.uniform(0, np.pi) / n
        q = geo.rotvec_to_quat(v)
        assert abs(np.linalg.norm(q) - 1.0) < 1e-12
        v_back = geo.quat_to_rotvec(q)
        assert np.allclose(v_back, v, atol=1e-9)


def test_quat_to_rotvec_known_and_double_cover():
    assert np.allclose(geo.quat_to_rotvec([1, 0, 0, 0]), [0, 0, 0])
    assert np.allclose(geo.quat_to_rotvec([0, 1, 0, 0]), [np.pi, 0, 0], atol=1e-12)
    rng = np.random.default_rng(1)
    q = random_unit_quat(rng)
    assert np.allclose(geo.quat_to_rotvec(q), geo.quat_to_rotvec(-q), atol=1e-12)


def test_quat_dot_basic():
    rng = np.random.default_rng(2)
    q = random_unit_quat(rng)
    assert geo.quat_dot(q, q) == pytest.approx(1.0, abs=1e-12)
    assert geo.quat_dot(q, -q) == pytest.approx(-1.0, abs=1e-12)
    for axis in (np.eye(3)):
        q2 = rotate_quat_about_axis(q, axis, np.pi / 2)
        assert abs(geo.quat_dot(q, q2)) == pytest.approx(np.cos(np.pi / 4), abs=1e-12)


def test_angular_loss_scale_invariance():
    rng = np.random.default_rng(3)
    q = random_unit_quat(rng)
    for c in (2.0, 0.5, 1e-6, 731.0):
        assert geo.angular_loss(q, c * q) == pytest.approx(-1.0, abs=1e-12)


def test_angular_loss_orthogonal_raw():
    q = np.array([1.0, 0.0, 0.0, 0.0])
    assert geo.angular_loss(q, [0.0, 3.0, 0.0, 0.0]) == pytest.approx(0.0, abs=1e-12)


def test_angular_loss_equals_minus_cos_half_theta():
    rng = np.random.default_rng(4)
    for theta in (0.0, np.pi / 4, np.pi / 2, np.pi):
        for _ in range(25):
            q = random_unit_quat(rng)
            q2 = rotate_quat_about_axis(q, rng.normal(size=3), theta)
            # the relative rotation angle is theta regardless of base quaternion
            assert geo.angular_loss(q, q2) == pytest.approx(-np.cos(theta / 2), abs=1e-9)


def test_angular_loss_degenerate_raw():
    with pytest.raises(DegenerateInputError):
        geo.angular_loss(np.array([1.0, 0, 0, 0]), [0.0, 0.0, 0.0, 1e-15])


def test_angular_distance_basic():
    rng = np.random.default_rng(5)
    q = random_unit_quat(rng)
    assert geo.angular_distance_deg(q, q) == pytest.approx(0.0, abs=1e-6)
    assert geo.angular_distance_deg(q, -q) == pytest.approx(0.0, abs=1e-6)
    q2 = rotate_quat_about_axis(q, [0, 0, 1], np.pi / 2)
    assert geo.angular_distance_deg(q, q2) == pytest.approx(90.0, abs=1e-6)


def test_angular_distance_symmetric_identity():
    rng = np.random.default_rng(6)
    for _ in range(50):
        a, b = random_unit_quat(rng), random_unit_quat(rng)
        assert geo.angular_distance_deg(a, b) == pytest.approx(
            geo.angular_distance_deg(b, a), abs=1e-9
        )
    a = random_unit_quat(rng)
    assert geo.angular_distance_deg(a, a) < 1e-6


def test_app_distortion_perfect_estimate():
    rng = np.random.default_rng(7)
    pose = geo.Pose(position=rng.normal(size=3), orientation=random_unit_quat(rng))
    d = geo.app_distortion(pose, pose.position, pose.orientation, alpha=0.7)
    assert d == pytest.approx(-0.7, abs=1e-12)


def test_app_distortion_alpha_zero_is_position_error():
    pose = geo.Pose(position=[1.0, 2.0, 3.0], orientation=[1, 0, 0, 0])
    d = geo.app_distortion(pose, [1.0, 2.0, 5.0], [0.0, 1.0, 0.0, 0.0], alpha=0.0)
    assert d == pytest.approx(2.0, abs=1e-12)


def test_app_distortion_worked_example():
    pose = geo.Pose(position=[0.0, 0.0, 0.0], orientation=[1, 0, 0, 0])
    d = geo.app_distortion(pose, [3.0, 4.0, 0.0], pose.orientation, alpha=0.7)
    assert d == pytest.approx(0.3 * 5 - 0.7, abs=1e-12)


def test_app_distortion_lower_bound():
    rng = np.random.default_rng(8)
    alpha = 0.7
    for _ in range(200):
        pose = geo.Pose(position=rng.normal(size=3), orientation=random_unit_quat(rng))
        d = geo.app_distortion(pose, rng.normal(size=3), rng.normal(size=4), alpha)
        assert d >= -alpha - 1e-12
    # equality iff orientations agree up to sign and positions match
    pose = geo.Pose(position=[0, 0, 0], orientation=random_unit_quat(rng))
    assert geo.app_distortion(pose, pose.position, -2.0 * pose.orientation, alpha) == pytest.approx(
        -alpha, abs=1e-12
    )


def test_pose_row_roundtrip():
    rng = np.random.default_rng(9)
    pose = geo.Pose(position=rng.normal(size=3), orientation=random_unit_quat(rng))
    again = geo.Pose.from_row(pose.as_row())
    assert np.allclose(again.position, pose.position)
    assert np.allclose(again.orientation, pose.orientation)
