"""Screw-axis estimation from two-hand pose trajectories.

Each joint type has its own estimator; :func:`select_joint_type` runs all of
them and keeps the model whose regenerated trajectory sits closest to the
observation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from ._search import grid_golden_min
from .errors import (
    AlignmentError,
    BranchAmbiguityError,
    CircleFitDegenerateError,
    DegenerateTrajectoryError,
    InvalidArgumentError,
    NoModelError,
    ScrewError,
)
from .se3 import (
    DEFAULT_LAMBDA,
    SMALL_ANGLE,
    JointType,
    Pose,
    ScrewAxis,
    axis_angle_matrix,
    axis_error,
    canonicalize_axis,
    log_pose,
    pose_distances,
    rotation_angle,
)
from .trajectory import HandTrajectory, RelativeTrajectory
from .waypoints import WaypointPlan, generate_relative_waypoints, relative_poses_batch

MIN_STEP_ANGLE = 1e-4
MAX_STEP_ANGLE = math.pi - 0.01


@dataclass(frozen=True)
class FitResult:
    axis: ScrewAxis
    score: float
    per_type_scores: dict
    info: dict = field(default_factory=dict)


@dataclass(frozen=True)
class NoiseSpec:
    sigma_pos: float  # m
    sigma_rot: float  # deg
    seed: int = 0

    def __post_init__(self):
        if self.sigma_pos < 0 or self.sigma_rot < 0:
            raise InvalidArgumentError("noise sigmas must be nonnegative")


# (sigma_pos m, sigma_rot deg) for levels 1..5
STANDARD_NOISE_LEVELS = [(0.010, 2.5), (0.015, 5.0), (0.020, 7.5), (0.025, 10.0), (0.030, 12.5)]


def relative_trajectory(left: HandTrajectory, right: HandTrajectory) -> RelativeTrajectory:
    if len(left) != len(right):
        raise AlignmentError(f"left has {len(left)} samples, right has {len(right)}")
    if np.any(np.abs(left.times - right.times) > 1e-6):
        i = int(np.argmax(np.abs(left.times - right.times) > 1e-6))
        raise AlignmentError(f"timestamps disagree at sample {i}")
    poses = [L.inverse() @ R for L, R in zip(left.poses, right.poses)]
    return RelativeTrajectory(left.times, poses)


def _result(traj, axis, lam, **info) -> FitResult:
    score = model_score(traj, axis, lam)
    return FitResult(axis, score, {axis.joint_type: score}, info)


def fit_prismatic(traj: RelativeTrajectory, lam: float = DEFAULT_LAMBDA) -> FitResult:
    """Principal line through the right-hand positions."""
    if len(traj) < 2:
        raise DegenerateTrajectoryError("prismatic fit needs at least 2 samples")
    P = traj.positions()
    chord = P[-1] - P[0]
    if np.linalg.norm(chord) <= 1e-6:
        raise DegenerateTrajectoryError("positions do not move")
    c = P.mean(axis=0)
    _, _, Vt = np.linalg.svd(P - c)
    s = Vt[0]
    if s @ chord < 0:
        s = -s
    axis = canonicalize_axis(ScrewAxis(JointType.PRISMATIC, c, s, math.inf))
    return _result(traj, axis, lam)


def fit_revolute(traj: RelativeTrajectory, lam: float = DEFAULT_LAMBDA) -> FitResult:
    """Average of per-sample screw axes of the displacements ``T_i T_0^-1``."""
    n = len(traj)
    if n < 2:
        raise DegenerateTrajectoryError("revolute fit needs at least 2 samples")
    T0inv = traj.t_initial.inverse()
    dirs, points, pitches, angles = [], [], [], []
    skipped = 0
    for pose in traj.poses[1:]:
        D = pose @ T0inv
        th = rotation_angle(D.rotation)
        if not (MIN_STEP_ANGLE < th < MAX_STEP_ANGLE):
            skipped += 1
            continue
        try:
            xi = log_pose(D)
        except BranchAmbiguityError:
            skipped += 1
            continue
        wn = float(np.linalg.norm(xi.omega))
        s = xi.omega / wn
        # point on the axis closest to the origin; pitch is dropped
        q = np.cross(s, xi.v) / wn
        dirs.append(s)
        points.append(q)
        angles.append(th)
        pitches.append(float(s @ xi.v) / wn)
    if not dirs or skipped > 0.5 * (n - 1):
        raise DegenerateTrajectoryError(
            f"only {len(dirs)} of {n - 1} displacements have a usable rotation"
        )
    # sign reference: the largest rotation has the best-conditioned direction
    dirs = np.array(dirs)
    ref = dirs[int(np.argmax(angles))]
    dirs[dirs @ ref < 0] *= -1.0
    s = np.mean(dirs, axis=0)
    if np.linalg.norm(s) < SMALL_ANGLE:
        raise DegenerateTrajectoryError("averaged axis direction vanished")
    s = s / np.linalg.norm(s)
    q = np.mean(points, axis=0)
    axis = canonicalize_axis(ScrewAxis(JointType.REVOLUTE, q, s, 0.0))
    return _result(
        traj, axis, lam, used=len(dirs), skipped=skipped, mean_abs_pitch=float(np.mean(np.abs(pitches)))
    )


def fit_revolute3d(traj: RelativeTrajectory, lam: float = DEFAULT_LAMBDA) -> FitResult:
    """Plane normal gives the direction, a Kasa circle fit in that plane the center."""
    if len(traj) < 3:
        raise CircleFitDegenerateError("circle fit needs at least 3 samples")
    P = traj.positions()
    c = P.mean(axis=0)
    X = P - c
    _, S, Vt = np.linalg.svd(X)
    if S[0] < 1e-9 or S[1] < 1e-9 * max(S[0], 1.0):
        raise CircleFitDegenerateError("positions are collinear")
    e1, e2, normal = Vt[0], Vt[1], Vt[2]
    u, v = X @ e1, X @ e2
    A = np.column_stack([2.0 * u, 2.0 * v, np.ones_like(u)])
    (a, b, _), *_ = np.linalg.lstsq(A, u * u + v * v, rcond=None)
    center = c + a * e1 + b * e2
    axis = canonicalize_axis(ScrewAxis(JointType.REVOLUTE3D, center, normal, 0.0))
    radius = float(np.mean(np.hypot(u - a, v - b)))
    return _result(traj, axis, lam, radius=radius)


ESTIMATORS = {
    JointType.PRISMATIC: fit_prismatic,
    JointType.REVOLUTE: fit_revolute,
    JointType.REVOLUTE3D: fit_revolute3d,
}


def registration_errors(traj: RelativeTrajectory, axis: ScrewAxis, lam: float = DEFAULT_LAMBDA):
    """Per-sample ``min_theta pose_distance(sample, model(theta))`` and the argmin."""
    Rs = traj.rotations()
    ts = traj.positions()
    T0 = traj.t_initial
    span = 2.0 * math.pi if axis.joint_type.rotational else 1.0

    def f(th):
        R, t = relative_poses_batch(axis, th, T0.rotation, T0.translation)
        extra = th.ndim - 1
        Ro = Rs.reshape(Rs.shape[:1] + (1,) * extra + (3, 3))
        to = ts.reshape(ts.shape[:1] + (1,) * extra + (3,))
        return pose_distances(Ro, to, R, t, lam)

    m = len(traj)
    return grid_golden_min(f, np.full(m, -span), np.full(m, span), n_grid=64, tol=1e-6)


def model_score(traj: RelativeTrajectory, axis: ScrewAxis, lam: float = DEFAULT_LAMBDA) -> float:
    """Mean registered pose discrepancy between the trajectory and the axis model."""
    _, d = registration_errors(traj, axis, lam)
    return float(np.mean(d))


def select_joint_type(traj: RelativeTrajectory, lam: float = DEFAULT_LAMBDA) -> FitResult:
    """MAP joint type under a uniform prior: the minimum-score model wins."""
    if len(traj) < 2:
        raise DegenerateTrajectoryError("need at least 2 samples")
    fits, failures = {}, {}
    for jt, est in ESTIMATORS.items():
        try:
            fits[jt] = est(traj, lam)
        except ScrewError as exc:
            failures[jt.value] = str(exc)
    if not fits:
        raise NoModelError(f"no estimator succeeded: {failures}")
    scores = {jt: r.score for jt, r in fits.items()}
    best = min(fits, key=lambda jt: (scores[jt], list(ESTIMATORS).index(jt)))
    r = fits[best]
    return FitResult(r.axis, r.score, scores, dict(r.info, failures=failures))


def perturb_trajectory(traj: RelativeTrajectory, noise: NoiseSpec) -> RelativeTrajectory:
    """Gaussian position noise plus a random-axis rotation of Gaussian angle per sample."""
    rng = np.random.default_rng(noise.seed)
    n = len(traj)
    dp = rng.normal(0.0, noise.sigma_pos, size=(n, 3))
    axes = rng.normal(size=(n, 3))
    angles = rng.normal(0.0, math.radians(noise.sigma_rot), size=n)
    out = []
    for i, p in enumerate(traj.poses):
        if noise.sigma_pos == 0 and noise.sigma_rot == 0:
            out.append(p)
            continue
        a = axes[i] / np.linalg.norm(axes[i])
        out.append(Pose(p.rotation @ axis_angle_matrix(a, angles[i]), p.translation + dp[i]))
    return RelativeTrajectory(traj.times, out)


@dataclass(frozen=True)
class NoiseLevelRow:
    level: int
    sigma_pos_m: float
    sigma_rot_deg: float
    mean_dist_m: float
    std_dist_m: float
    mean_angle_deg: float
    std_angle_deg: float
    failures: int
    distances: tuple = ()
    angles: tuple = ()

    def csv_row(self) -> dict:
        return {
            "level": self.level,
            "sigma_pos_m": self.sigma_pos_m,
            "sigma_rot_deg": self.sigma_rot_deg,
            "mean_dist_m": self.mean_dist_m,
            "std_dist_m": self.std_dist_m,
            "mean_angle_deg": self.mean_angle_deg,
            "std_angle_deg": self.std_angle_deg,
            "failures": self.failures,
        }


def standard_noise_levels(seed: int = 0) -> list[NoiseSpec]:
    return [NoiseSpec(p, r, seed + 1000 * (i + 1)) for i, (p, r) in enumerate(STANDARD_NOISE_LEVELS)]


def bottle_ground_truth() -> tuple[ScrewAxis, WaypointPlan]:
    """Default ground truth for the noise study: a cap turned half a revolution.

    Right wrist 3 cm off a vertical axis, 30 samples over 180 degrees.
    """
    axis = ScrewAxis(JointType.REVOLUTE, [0.0, 0.04, 0.0], [0.0, 0.0, 1.0], 0.0)
    R0 = axis_angle_matrix(np.array([1.0, 0.0, 0.0]), math.pi / 2)
    T0 = Pose(R0, [0.03, 0.04, 0.12])
    return axis, WaypointPlan(math.pi, 29, T0)


def run_noise_study(
    gt_axis: ScrewAxis,
    gt_plan: WaypointPlan,
    levels: Sequence[NoiseSpec],
    trials_per_level: int,
    lam: float = DEFAULT_LAMBDA,
    first_level: int = 1,
) -> list[NoiseLevelRow]:
    if trials_per_level < 1:
        raise InvalidArgumentError("trials_per_level must be >= 1")
    clean = RelativeTrajectory.from_poses(generate_relative_waypoints(gt_axis, gt_plan))
    estimator = ESTIMATORS[gt_axis.joint_type]
    rows = []
    for li, spec in enumerate(levels):
        dists, angs, failures = [], [], 0
        for trial in range(trials_per_level):
            noisy = perturb_trajectory(
                clean, NoiseSpec(spec.sigma_pos, spec.sigma_rot, spec.seed + trial)
            )
            try:
                fit = estimator(noisy, lam)
            except ScrewError:
                failures += 1
                continue
            err = axis_error(fit.axis, gt_axis)
            dists.append(err.distance)
            angs.append(err.angle)
        d = np.array(dists) if dists else np.array([np.nan])
        a = np.array(angs) if angs else np.array([np.nan])
        rows.append(
            NoiseLevelRow(
                level=first_level + li,
                sigma_pos_m=spec.sigma_pos,
                sigma_rot_deg=spec.sigma_rot,
                mean_dist_m=float(d.mean()),
                std_dist_m=float(d.std()),
                mean_angle_deg=float(a.mean()),
                std_angle_deg=float(a.std()),
                failures=failures,
                distances=tuple(dists),
                angles=tuple(angs),
            )
        )
    return rows


def fit_axis(traj: RelativeTrajectory, joint_type: Optional[JointType] = None, lam: float = DEFAULT_LAMBDA) -> FitResult:
    """Fit with a given estimator, or select the type automatically."""
    if joint_type is None:
        return select_joint_type(traj, lam)
    return ESTIMATORS[JointType(joint_type)](traj, lam)


__all__ = [
    "FitResult",
    "NoiseSpec",
    "NoiseLevelRow",
    "STANDARD_NOISE_LEVELS",
    "relative_trajectory",
    "fit_prismatic",
    "fit_revolute",
    "fit_revolute3d",
    "model_score",
    "registration_errors",
    "select_joint_type",
    "perturb_trajectory",
    "run_noise_study",
    "standard_noise_levels",
    "bottle_ground_truth",
    "fit_axis",
]
