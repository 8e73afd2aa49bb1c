"""Turning a screw action into bimanual waypoints."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .errors import AlignmentError, InvalidArgumentError
from .se3 import JointType, Pose, ScrewAxis, axis_displacements, exp_coords, screw_to_twist
from .trajectory import HandTrajectory, RelativeTrajectory


@dataclass(frozen=True, eq=False)
class ScrewAction:
    g_l: np.ndarray
    g_r: np.ndarray
    axis: ScrewAxis
    tau_l: Optional[HandTrajectory] = None

    def __post_init__(self):
        for name in ("g_l", "g_r"):
            g = np.array(getattr(self, name), dtype=float).reshape(3)
            if not np.all(np.isfinite(g)):
                raise InvalidArgumentError(f"{name} must be finite")
            g.setflags(write=False)
            object.__setattr__(self, name, g)


@dataclass(frozen=True, eq=False)
class WaypointPlan:
    theta_total: float
    k_steps: int
    t_initial: Pose = field(default_factory=Pose.identity)

    def __post_init__(self):
        if int(self.k_steps) != self.k_steps or self.k_steps < 1:
            raise InvalidArgumentError("k_steps must be a positive integer")
        if not np.isfinite(self.theta_total):
            raise InvalidArgumentError("theta_total must be finite")
        object.__setattr__(self, "k_steps", int(self.k_steps))
        object.__setattr__(self, "theta_total", float(self.theta_total))

    @property
    def thetas(self) -> np.ndarray:
        return np.arange(self.k_steps + 1) * (self.theta_total / self.k_steps)


@dataclass(frozen=True, eq=False)
class BimanualWaypoints:
    left: tuple
    right: tuple
    relative: tuple


def relative_poses_batch(axis: ScrewAxis, thetas, R0, t0):
    """Stacked right-in-left poses at ``thetas``, honouring joint-type semantics.

    Returns ``(R, t)`` of shapes ``(..., 3, 3)`` and ``(..., 3)``.
    """
    thetas = np.asarray(thetas, dtype=float)
    R0 = np.asarray(R0, dtype=float)
    t0 = np.asarray(t0, dtype=float)
    if axis.joint_type is JointType.PRISMATIC:
        R = np.broadcast_to(R0, thetas.shape + (3, 3))
        t = t0 + thetas[..., None] * axis.s_hat
        return R, t
    Rd, td = axis_displacements(axis, thetas)
    t = Rd @ t0 + td
    if axis.joint_type is JointType.REVOLUTE3D:
        return np.broadcast_to(R0, thetas.shape + (3, 3)), t
    return Rd @ R0, t


def screw_waypoint(axis: ScrewAxis, theta: float, t_initial: Pose) -> Pose:
    """Right-in-left pose after moving ``theta`` along ``axis`` from ``t_initial``."""
    if axis.joint_type is JointType.PRISMATIC:
        return Pose(t_initial.rotation, t_initial.translation + axis.s_hat * theta)
    D = exp_coords(screw_to_twist(axis, theta))
    if axis.joint_type is JointType.REVOLUTE3D:
        # orientation pinned; only the position sweeps around the axis
        return Pose(t_initial.rotation, D.rotation @ t_initial.translation + D.translation)
    return D @ t_initial


def generate_relative_waypoints(axis: ScrewAxis, plan: WaypointPlan) -> list[Pose]:
    """K+1 poses ``exp([S] theta_k) T_0`` with ``theta_k = k theta_T / K``."""
    return [screw_waypoint(axis, th, plan.t_initial) for th in plan.thetas]


def compose_bimanual(
    action: ScrewAction, plan: WaypointPlan, left_world: Sequence[Pose]
) -> BimanualWaypoints:
    relative = generate_relative_waypoints(action.axis, plan)
    left = tuple(left_world)
    if len(left) != len(relative):
        raise AlignmentError(
            f"left-hand trajectory has {len(left)} poses, plan needs {len(relative)}"
        )
    right = tuple(L @ rel for L, rel in zip(left, relative))
    return BimanualWaypoints(left, right, tuple(relative))


def left_hand_poses(action: ScrewAction, plan: WaypointPlan, base: Optional[Pose] = None) -> list[Pose]:
    """World poses of the left hand for every waypoint.

    With no ``tau_l`` the left hand holds ``base`` (identity rotation at
    ``g_l`` by default). A ``tau_l`` of matching length is used as is.
    """
    n = plan.k_steps + 1
    if action.tau_l is None or len(action.tau_l) == 0:
        if base is None:
            base = Pose(np.eye(3), action.g_l)
        return [base] * n
    if len(action.tau_l) != n:
        raise AlignmentError(f"tau_l has {len(action.tau_l)} poses, plan needs {n}")
    return list(action.tau_l.poses)


def demo_waypoints_passthrough(traj: RelativeTrajectory, n_keep: int) -> list[Pose]:
    """Uniform index subsample of a demonstration, endpoints included."""
    n = len(traj)
    if n_keep < 2:
        raise InvalidArgumentError("n_keep must be at least 2")
    if n_keep > n:
        raise InvalidArgumentError(f"n_keep={n_keep} exceeds {n} samples")
    idx = np.rint(np.linspace(0, n - 1, n_keep)).astype(int)
    return [traj.poses[i] for i in idx]
