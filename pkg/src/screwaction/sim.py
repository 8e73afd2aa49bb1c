"""Quasi-static simulated 1-DoF mechanism.

The mechanism only admits right-in-left poses on its true screw path. A
commanded pose is projected onto that path; the residual acts through a
spring, and progress along the path costs a constant friction. The
resulting wrench norm drives the three failure detectors.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Sequence

import numpy as np

from ._search import grid_golden_min
from .errors import InvalidArgumentError
from .se3 import DEFAULT_LAMBDA, Pose, ScrewAxis, rotation_angles
from .waypoints import relative_poses_batch

PROGRESS_EPS = 1e-6
PROJECTION_TOL = 1e-12


class Failure(str, Enum):
    NONE = "none"
    LOW_FORCE = "low_force"
    HIGH_FORCE = "high_force"
    GRASP_LOST = "grasp_lost"

    def __str__(self):
        return self.value


@dataclass(frozen=True, eq=False)
class Mechanism:
    true_axis: ScrewAxis
    t_initial: Pose
    theta_range: tuple
    friction: float = 2.0
    k_pos: float = 200.0  # per m
    k_rot: float = 5.0  # per rad
    f_min: float = 0.5
    f_max: float = 10.0
    d_grasp: float = 0.05  # m
    theta_success_fraction: float = 0.9
    lam: float = DEFAULT_LAMBDA

    def __post_init__(self):
        lo, hi = (float(v) for v in self.theta_range)
        object.__setattr__(self, "theta_range", (lo, hi))
        if not hi > lo:
            raise InvalidArgumentError("theta_range must have hi > lo")
        if not self.f_min < self.friction < self.f_max:
            raise InvalidArgumentError("need f_min < friction < f_max")
        if self.d_grasp <= 0:
            raise InvalidArgumentError("d_grasp must be positive")
        if min(self.k_pos, self.k_rot, self.friction) < 0:
            raise InvalidArgumentError("stiffness and friction must be nonnegative")
        if not 0 < self.theta_success_fraction <= 1:
            raise InvalidArgumentError("theta_success_fraction must be in (0, 1]")

    @property
    def span(self) -> float:
        return self.theta_range[1] - self.theta_range[0]

    def feasible(self, theta) -> tuple[np.ndarray, np.ndarray]:
        T0 = self.t_initial
        return relative_poses_batch(self.true_axis, theta, T0.rotation, T0.translation)

    def replace(self, **kw) -> Mechanism:
        d = {f: getattr(self, f) for f in self.__dataclass_fields__}
        d.update(kw)
        return Mechanism(**d)


@dataclass(frozen=True)
class EpisodeResult:
    """Outcome of one executed waypoint sequence.

    ``blind_*`` fields describe the same episode with the grasp-lost
    detector switched off (used by the reward ablation).
    """

    completed_waypoints: int
    k_total: int
    wrench_trace: tuple
    mean_wrench: float
    failure: Failure
    theta_final: float
    blind_completed: int = 0
    blind_mean_wrench: float = 0.0
    blind_failure: Failure = Failure.NONE

    def to_json(self) -> dict:
        return {
            "completed_waypoints": self.completed_waypoints,
            "k_total": self.k_total,
            "wrench_trace": list(self.wrench_trace),
            "mean_wrench": self.mean_wrench,
            "failure": self.failure.value,
            "theta_final": self.theta_final,
        }


def project_many(mech: Mechanism, Rs: np.ndarray, ts: np.ndarray):
    """Project stacked poses onto the mechanism path. Returns ``(theta*, e_pos, e_rot)``."""
    Rs = np.asarray(Rs, dtype=float).reshape(-1, 3, 3)
    ts = np.asarray(ts, dtype=float).reshape(-1, 3)
    m = len(ts)
    lo, hi = mech.theta_range

    def parts(th):
        R, t = mech.feasible(th)
        extra = th.ndim - 1
        Ro = Rs.reshape((m,) + (1,) * extra + (3, 3))
        to = ts.reshape((m,) + (1,) * extra + (3,))
        e_pos = np.linalg.norm(to - t, axis=-1)
        e_rot = rotation_angles(np.swapaxes(Ro, -1, -2) @ R)
        return e_pos, e_rot

    def f(th):
        e_pos, e_rot = parts(th)
        return e_pos + mech.lam * e_rot

    theta, _ = grid_golden_min(f, np.full(m, lo), np.full(m, hi), n_grid=32, tol=PROJECTION_TOL)
    e_pos, e_rot = parts(theta)
    return theta, e_pos, e_rot


def project_to_mechanism(mech: Mechanism, rel_pose: Pose) -> tuple[float, float, float]:
    th, ep, er = project_many(mech, rel_pose.rotation[None], rel_pose.translation[None])
    return float(th[0]), float(ep[0]), float(er[0])


def _step_failure(wrench, e_pos, mech, detect_grasp):
    if detect_grasp and e_pos > mech.d_grasp:
        return Failure.GRASP_LOST
    if wrench > mech.f_max:
        return Failure.HIGH_FORCE
    if wrench < mech.f_min:
        return Failure.LOW_FORCE
    return Failure.NONE


def _walk(theta, e_pos, wrench, mech, detect_grasp):
    K = len(theta) - 1
    for k in range(1, K + 1):
        fail = _step_failure(wrench[k - 1], e_pos[k], mech, detect_grasp)
        if fail is not Failure.NONE:
            return k - 1, k, fail
    return K, K, Failure.NONE


def run_episode(mech: Mechanism, relative_waypoints: Sequence[Pose]) -> EpisodeResult:
    """Execute waypoints ``1..K`` against the mechanism, stopping at the first failure."""
    wps = list(relative_waypoints)
    if len(wps) < 2:
        raise InvalidArgumentError("need at least one waypoint beyond the initial pose")
    Rs = np.array([p.rotation for p in wps])
    ts = np.array([p.translation for p in wps])
    return run_episode_arrays(mech, Rs, ts)


def run_episode_arrays(mech: Mechanism, Rs: np.ndarray, ts: np.ndarray) -> EpisodeResult:
    theta, e_pos, e_rot = project_many(mech, Rs, ts)
    K = len(theta) - 1
    advanced = theta[1:] > theta[:-1] + PROGRESS_EPS
    # wrench[k-1] is the reading at waypoint k
    wrench = mech.k_pos * e_pos[1:] + mech.k_rot * e_rot[1:] + np.where(advanced, mech.friction, 0.0)

    done, n_exec, fail = _walk(theta, e_pos, wrench, mech, True)
    b_done, b_exec, b_fail = _walk(theta, e_pos, wrench, mech, False)
    trace = tuple(float(w) for w in wrench[:n_exec])
    return EpisodeResult(
        completed_waypoints=done,
        k_total=K,
        wrench_trace=trace,
        mean_wrench=float(np.mean(trace)) if trace else 0.0,
        failure=fail,
        theta_final=float(theta[done]),
        blind_completed=b_done,
        blind_mean_wrench=float(np.mean(wrench[:b_exec])) if b_exec else 0.0,
        blind_failure=b_fail,
    )


def is_success(mech: Mechanism, result: EpisodeResult) -> bool:
    """All waypoints done and the mechanism driven through enough of its range."""
    if result.failure is not Failure.NONE:
        return False
    progress = result.theta_final - mech.theta_range[0]
    return progress >= mech.theta_success_fraction * mech.span - 1e-12
