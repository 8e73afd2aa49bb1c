import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.spatial.transform import Rotation

from screwaction.errors import BranchAmbiguityError, DegenerateTwistError, InvalidArgumentError
from screwaction.se3 import (
    JointType,
    Pose,
    ScrewAxis,
    Twist,
    axis_angle_matrix,
    axis_displacements,
    axis_error,
    canonicalize_axis,
    exp_coords,
    log_pose,
    pose_distance,
    random_rotation,
    screw_to_twist,
    skew,
    twist_to_screw,
)

from strategies import axes, poses, twists, unit_vectors, vec3

Z = np.array([0.0, 0.0, 1.0])


def series_exp(xi: Twist, terms=30) -> np.ndarray:
    """Matrix exponential of the 4x4 twist matrix by direct power-series summation."""
    M = np.zeros((4, 4))
    M[:3, :3] = skew(xi.omega)
    M[:3, 3] = xi.v
    out = np.eye(4)
    term = np.eye(4)
    for k in range(1, terms):
        term = term @ M / k
        out = out + term
    return out


def line_distance_oracle(a: ScrewAxis, b: ScrewAxis) -> float:
    """Closest approach of two lines by least squares over both line parameters."""
    A = np.column_stack([a.s_hat, -b.s_hat])
    st_, *_ = np.linalg.lstsq(A, b.q - a.q, rcond=None)
    return float(np.linalg.norm(a.q + st_[0] * a.s_hat - b.q - st_[1] * b.s_hat))


# exp / log


def test_exp_pure_translation():
    T = exp_coords(Twist(np.zeros(3), [1.0, 0, 0]))
    np.testing.assert_allclose(T.rotation, np.eye(3))
    np.testing.assert_allclose(T.translation, [1, 0, 0])


def test_exp_pure_rotation():
    T = exp_coords(Twist([0, 0, math.pi / 2], np.zeros(3)))
    np.testing.assert_allclose(T.rotation, axis_angle_matrix(Z, math.pi / 2), atol=1e-15)
    np.testing.assert_allclose(T.translation, 0, atol=1e-15)


def test_exp_rejects_non_finite():
    with pytest.raises(InvalidArgumentError):
        exp_coords(Twist([math.nan, 0, 0], np.zeros(3)))


@given(twists(max_angle=math.pi - 1e-3))
def test_exp_matches_power_series(xi):
    np.testing.assert_allclose(exp_coords(xi).as_matrix(), series_exp(xi), atol=1e-9)


@given(twists(min_angle=0.0, max_angle=1e-3))
def test_exp_small_angle_branch_matches_series(xi):
    np.testing.assert_allclose(exp_coords(xi).as_matrix(), series_exp(xi), atol=1e-12)


def test_log_identity_and_translation():
    xi = log_pose(Pose.identity())
    np.testing.assert_array_equal(xi.as_vector(), 0)
    xi = log_pose(Pose(np.eye(3), [0.3, 0, 0]))
    np.testing.assert_allclose(xi.omega, 0)
    np.testing.assert_allclose(xi.v, [0.3, 0, 0])


def test_log_roundtrip_1000_random_poses():
    rng = np.random.default_rng(1)
    worst = 0.0
    for _ in range(1000):
        axis = rng.normal(size=3)
        R = axis_angle_matrix(axis / np.linalg.norm(axis), rng.uniform(0.01, 3.0))
        T = Pose(R, rng.uniform(-1, 1, 3))
        back = exp_coords(log_pose(T))
        worst = max(worst, np.abs(back.as_matrix() - T.as_matrix()).max())
    assert worst < 1e-9


def test_log_refuses_branch_cut():
    with pytest.raises(BranchAmbiguityError):
        log_pose(Pose(axis_angle_matrix(Z, math.pi), np.zeros(3)))
    with pytest.raises(BranchAmbiguityError):
        log_pose(Pose(axis_angle_matrix(Z, math.pi - 1e-7), np.zeros(3)))


@given(twists())
def test_log_inverts_exp(xi):
    back = log_pose(exp_coords(xi))
    np.testing.assert_allclose(back.as_vector(), xi.as_vector(), atol=1e-9)


# screw <-> twist


def test_screw_to_twist_revolute_example():
    xi = screw_to_twist(ScrewAxis(JointType.REVOLUTE, [1, 0, 0], Z), 1.0)
    np.testing.assert_allclose(xi.omega, [0, 0, 1])
    np.testing.assert_allclose(xi.v, [0, -1, 0])


def test_screw_to_twist_prismatic_example():
    xi = screw_to_twist(ScrewAxis(JointType.PRISMATIC, np.zeros(3), [1, 0, 0]), 0.2)
    np.testing.assert_allclose(xi.omega, 0)
    np.testing.assert_allclose(xi.v, [0.2, 0, 0])


@given(axes())
def test_zero_displacement_is_zero_twist(axis):
    np.testing.assert_array_equal(np.abs(screw_to_twist(axis, 0.0).as_vector()), 0)


def test_twist_to_screw_examples():
    ax = twist_to_screw(Twist([0, 0, 1], [0, -1, 0]))
    assert ax.joint_type is JointType.REVOLUTE
    np.testing.assert_allclose(ax.s_hat, Z)
    np.testing.assert_allclose(ax.q, [1, 0, 0])
    ax = twist_to_screw(Twist(np.zeros(3), [0, 0, 0.5]))
    assert ax.joint_type is JointType.PRISMATIC
    np.testing.assert_allclose(ax.s_hat, Z)


def test_twist_to_screw_degenerate():
    with pytest.raises(DegenerateTwistError):
        twist_to_screw(Twist(np.zeros(3), np.full(3, 1e-9)))


def test_twist_to_screw_reports_helical_pitch():
    ax = twist_to_screw(Twist([0, 0, 2.0], [0, 0, 0.2]))
    assert ax.general_pitch
    assert ax.pitch == pytest.approx(0.1)


@given(axes(joint_types=(JointType.REVOLUTE, JointType.REVOLUTE3D)), st.floats(0.01, 3.0))
def test_screw_twist_roundtrip_rotational(axis, theta):
    back = twist_to_screw(screw_to_twist(axis, theta))
    np.testing.assert_allclose(back.s_hat, axis.s_hat, atol=1e-9)
    np.testing.assert_allclose(back.q, axis.q, atol=1e-9)
    assert back.pitch == 0.0


@given(axes(joint_types=(JointType.PRISMATIC,)), st.floats(0.01, 1.0))
def test_screw_twist_roundtrip_prismatic(axis, theta):
    back = twist_to_screw(screw_to_twist(axis, theta))
    assert back.joint_type is JointType.PRISMATIC
    np.testing.assert_allclose(back.s_hat, axis.s_hat, atol=1e-9)


@given(axes(joint_types=(JointType.REVOLUTE,)), st.floats(-3.0, 3.0))
def test_screw_twist_matches_displacement(axis, theta):
    # exp of the screw twist is the rotation about the line through q
    T = exp_coords(screw_to_twist(axis, theta))
    R, t = axis_displacements(axis, [theta])
    np.testing.assert_allclose(T.rotation, R[0], atol=1e-12)
    np.testing.assert_allclose(T.translation, t[0], atol=1e-12)
    np.testing.assert_allclose(T.apply(axis.q[None])[0], axis.q, atol=1e-12)


# canonical form


def test_canonicalize_examples():
    ax = canonicalize_axis(ScrewAxis(JointType.REVOLUTE, [1, 0, 5], Z))
    np.testing.assert_allclose(ax.q, [1, 0, 0])
    ax = canonicalize_axis(ScrewAxis(JointType.REVOLUTE, np.zeros(3), -Z))
    np.testing.assert_allclose(ax.s_hat, Z)


def test_non_unit_direction_rejected():
    with pytest.raises(InvalidArgumentError):
        ScrewAxis(JointType.REVOLUTE, np.zeros(3), [0, 0, 0])


@given(axes(), st.floats(-2, 2))
def test_canonicalize_idempotent_and_line_preserving(axis, shift):
    moved = axis.replace(q=axis.q + shift * axis.s_hat, s_hat=-axis.s_hat)
    c = canonicalize_axis(moved)
    np.testing.assert_allclose(c.q, axis.q, atol=1e-12)
    np.testing.assert_allclose(c.s_hat, axis.s_hat, atol=1e-12)
    assert abs(c.q @ c.s_hat) < 1e-12
    assert next(x for x in c.s_hat if abs(x) > 1e-9) > 0


# axis error


def test_axis_error_examples():
    a = ScrewAxis(JointType.REVOLUTE, np.zeros(3), Z)
    assert axis_error(a, a) == (0.0, 0.0)
    b = a.replace(q=[0.02, 0, 0])
    d, ang = axis_error(a, b)
    assert d == pytest.approx(0.02) and ang == 0.0
    a = ScrewAxis(JointType.REVOLUTE, np.zeros(3), [1, 0, 0])
    b = ScrewAxis(JointType.REVOLUTE, [0, 0, 0.03], [0, 1, 0])
    d, ang = axis_error(a, b)
    assert d == pytest.approx(0.03) and ang == pytest.approx(90.0)


@given(axes(), axes())
def test_axis_error_matches_line_oracle(a, b):
    d, ang = axis_error(a, b)
    if ang > 1e-3:  # near-parallel lines make the least-squares oracle ill conditioned
        assert d == pytest.approx(line_distance_oracle(a, b), abs=1e-9)
    cosang = abs(float(a.s_hat @ b.s_hat))
    assert math.radians(ang) == pytest.approx(math.acos(min(1.0, cosang)), abs=1e-6)


@given(axes(), axes())
def test_axis_error_symmetric_and_sign_invariant(a, b):
    e = axis_error(a, b)
    assert axis_error(b, a) == pytest.approx(e, abs=1e-12)
    flipped = ScrewAxis(a.joint_type, a.q + 0.7 * a.s_hat, -a.s_hat, a.pitch)
    assert axis_error(flipped, b) == pytest.approx(e, abs=1e-9)
    assert 0.0 <= e.angle <= 90.0 and e.distance >= 0.0


# pose distance


def test_pose_distance_examples():
    a = Pose.identity()
    assert pose_distance(a, a) == 0.0
    assert pose_distance(a, Pose(np.eye(3), [0.1, 0, 0])) == pytest.approx(0.1)
    b = Pose(axis_angle_matrix(Z, math.pi / 2), np.zeros(3))
    assert pose_distance(a, b, 0.1) == pytest.approx(0.15708, abs=1e-5)


def test_pose_distance_rejects_nonpositive_lambda():
    with pytest.raises(InvalidArgumentError):
        pose_distance(Pose.identity(), Pose.identity(), 0.0)


@given(poses(), poses())
def test_pose_distance_matches_geodesic_oracle(a, b):
    angle = (Rotation.from_matrix(a.rotation).inv() * Rotation.from_matrix(b.rotation)).magnitude()
    expect = np.linalg.norm(a.translation - b.translation) + 0.1 * angle
    assert pose_distance(a, b) == pytest.approx(expect, abs=1e-7)


@given(poses(), poses(), poses())
def test_pose_distance_is_a_metric(a, b, c):
    assert pose_distance(a, b) == pytest.approx(pose_distance(b, a), abs=1e-12)
    assert pose_distance(a, a) < 1e-7
    assert pose_distance(a, c) <= pose_distance(a, b) + pose_distance(b, c) + 1e-9


@given(poses(), poses(), poses())
def test_pose_distance_left_invariant_rotation_part(a, b, g):
    # rotating both poses by the same element keeps the angle term and the translation gap
    ga, gb = g @ a, g @ b
    assert pose_distance(ga, gb) == pytest.approx(pose_distance(a, b), abs=1e-7)


def test_pose_quaternion_roundtrip():
    rng = np.random.default_rng(3)
    for _ in range(50):
        P = Pose(random_rotation(rng), rng.normal(size=3))
        Q = Pose.from_quaternion(P.quaternion, P.translation)
        np.testing.assert_allclose(Q.as_matrix(), P.as_matrix(), atol=1e-12)


@given(vec3, unit_vectors())
def test_pose_inverse(t, axis):
    P = Pose(axis_angle_matrix(axis, 1.1), t)
    np.testing.assert_allclose((P @ P.inverse()).as_matrix(), np.eye(4), atol=1e-12)
