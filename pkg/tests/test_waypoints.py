import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from screwaction.errors import AlignmentError, InvalidArgumentError
from screwaction.se3 import JointType, Pose, ScrewAxis, axis_angle_matrix, pose_distance, rotation_angle
from screwaction.trajectory import HandTrajectory, RelativeTrajectory
from screwaction.waypoints import (
    ScrewAction,
    WaypointPlan,
    compose_bimanual,
    demo_waypoints_passthrough,
    generate_relative_waypoints,
    left_hand_poses,
)

from strategies import axes, poses

X = np.array([1.0, 0.0, 0.0])
Z = np.array([0.0, 0.0, 1.0])


@given(axes(), poses(), st.integers(1, 12))
def test_zero_sweep_repeats_initial_pose(axis, t0, k):
    wps = generate_relative_waypoints(axis, WaypointPlan(0.0, k, t0))
    assert len(wps) == k + 1
    for p in wps:
        np.testing.assert_allclose(p.as_matrix(), t0.as_matrix(), atol=1e-15)


def test_prismatic_translations():
    axis = ScrewAxis(JointType.PRISMATIC, np.zeros(3), X)
    wps = generate_relative_waypoints(axis, WaypointPlan(0.1, 10))
    for k, p in enumerate(wps):
        np.testing.assert_allclose(p.translation, [0.01 * k, 0, 0], atol=1e-15)
        np.testing.assert_array_equal(p.rotation, np.eye(3))


def test_revolute_circle():
    q = np.array([0.3, 0, 0])
    axis = ScrewAxis(JointType.REVOLUTE, q, Z)
    wps = generate_relative_waypoints(axis, WaypointPlan(math.pi / 2, 20))
    for k, p in enumerate(wps):
        assert np.linalg.norm(p.translation - q) == pytest.approx(0.3, abs=1e-12)
        assert p.translation[2] == pytest.approx(0.0, abs=1e-15)
        # closed form: origin rotated by k*90/20 degrees about q
        a = k * math.pi / 40
        np.testing.assert_allclose(p.translation, q + 0.3 * np.array([-math.cos(a), -math.sin(a), 0]), atol=1e-12)
    np.testing.assert_allclose(wps[-1].rotation, axis_angle_matrix(Z, math.pi / 2), atol=1e-12)


@given(axes(joint_types=(JointType.REVOLUTE3D,)), poses(), st.floats(0.1, 6.0))
def test_revolute3d_keeps_orientation(axis, t0, theta):
    wps = generate_relative_waypoints(axis, WaypointPlan(theta, 8, t0))
    for p in wps:
        np.testing.assert_allclose(p.rotation, t0.rotation, atol=1e-15)
        # the position stays at a fixed distance from the axis line
        d0 = t0.translation - axis.q
        d = p.translation - axis.q
        r0 = np.linalg.norm(d0 - (d0 @ axis.s_hat) * axis.s_hat)
        assert np.linalg.norm(d - (d @ axis.s_hat) * axis.s_hat) == pytest.approx(r0, abs=1e-9)


@given(axes(joint_types=(JointType.REVOLUTE, JointType.PRISMATIC)), poses(), st.floats(0.1, 2.0))
def test_constant_step_size(axis, t0, theta):
    wps = generate_relative_waypoints(axis, WaypointPlan(theta, 10, t0))
    steps = [pose_distance(a, b) for a, b in zip(wps, wps[1:])]
    np.testing.assert_allclose(steps, steps[0], atol=1e-9)


def test_plan_validation():
    with pytest.raises(InvalidArgumentError):
        WaypointPlan(1.0, 0)
    with pytest.raises(InvalidArgumentError):
        WaypointPlan(math.inf, 3)


def test_compose_static_left_identity():
    axis = ScrewAxis(JointType.REVOLUTE, [0.3, 0, 0], Z)
    plan = WaypointPlan(1.0, 6)
    action = ScrewAction(np.zeros(3), np.zeros(3), axis)
    bw = compose_bimanual(action, plan, [Pose.identity()] * 7)
    for r, rel in zip(bw.right, bw.relative):
        np.testing.assert_array_equal(r.as_matrix(), rel.as_matrix())


def test_compose_length_mismatch():
    action = ScrewAction(np.zeros(3), np.zeros(3), ScrewAxis(JointType.REVOLUTE, np.zeros(3), Z))
    with pytest.raises(AlignmentError):
        compose_bimanual(action, WaypointPlan(1.0, 6), [Pose.identity()] * 5)


def test_compose_translating_left_keeps_relative():
    axis = ScrewAxis(JointType.REVOLUTE, [0.3, 0, 0], Z)
    plan = WaypointPlan(1.0, 6)
    action = ScrewAction(np.zeros(3), np.zeros(3), axis)
    left = [Pose(np.eye(3), [0, 0.01 * k, 0]) for k in range(7)]
    bw = compose_bimanual(action, plan, left)
    for L, R, rel in zip(bw.left, bw.right, bw.relative):
        np.testing.assert_allclose((L.inverse() @ R).as_matrix(), rel.as_matrix(), atol=1e-9)


def test_left_hand_default_and_tau():
    axis = ScrewAxis(JointType.REVOLUTE, np.zeros(3), Z)
    plan = WaypointPlan(1.0, 3)
    action = ScrewAction([0.1, 0.2, 0.3], np.zeros(3), axis)
    left = left_hand_poses(action, plan)
    assert len(left) == 4
    np.testing.assert_array_equal(left[0].translation, [0.1, 0.2, 0.3])
    tau = HandTrajectory.from_poses([Pose(np.eye(3), [k, 0, 0]) for k in range(4)])
    moving = left_hand_poses(ScrewAction(action.g_l, action.g_r, axis, tau), plan)
    assert [p.translation[0] for p in moving] == [0, 1, 2, 3]
    bad = HandTrajectory.from_poses([Pose.identity()] * 2)
    with pytest.raises(AlignmentError):
        left_hand_poses(ScrewAction(action.g_l, action.g_r, axis, bad), plan)


def _traj(n):
    return RelativeTrajectory.from_poses([Pose(np.eye(3), [k, 0, 0]) for k in range(n)])


def test_passthrough_examples():
    t = _traj(9)
    assert [p.translation[0] for p in demo_waypoints_passthrough(t, 9)] == list(range(9))
    assert [p.translation[0] for p in demo_waypoints_passthrough(t, 2)] == [0, 8]
    assert [p.translation[0] for p in demo_waypoints_passthrough(t, 5)] == [0, 2, 4, 6, 8]
    with pytest.raises(InvalidArgumentError):
        demo_waypoints_passthrough(t, 1)
    with pytest.raises(InvalidArgumentError):
        demo_waypoints_passthrough(t, 10)


@given(st.integers(2, 40), st.integers(2, 40))
def test_passthrough_keeps_endpoints_in_order(n, keep):
    keep = min(keep, n)
    idx = [p.translation[0] for p in demo_waypoints_passthrough(_traj(n), keep)]
    assert idx[0] == 0 and idx[-1] == n - 1 and len(idx) == keep
    assert all(b > a for a, b in zip(idx, idx[1:]))


def test_revolute_total_rotation_matches_sweep():
    axis = ScrewAxis(JointType.REVOLUTE, [0.0, 0.04, 0.0], Z)
    t0 = Pose(axis_angle_matrix(X, math.pi / 2), [0.03, 0.04, 0.12])
    wps = generate_relative_waypoints(axis, WaypointPlan(2.0, 10, t0))
    assert rotation_angle(wps[-1].rotation @ t0.rotation.T) == pytest.approx(2.0, abs=1e-12)
