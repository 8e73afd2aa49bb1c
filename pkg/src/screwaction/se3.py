"""Rigid-body and screw-theory primitives.

Poses are rotation-matrix/translation pairs, twists are ``(omega, v)`` pairs
and screw axes are ``(q, s_hat, pitch)`` lines tagged with a joint type.
Everything here is a pure function of immutable values.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import NamedTuple

import numpy as np
from scipy.spatial.transform import Rotation as _SciRotation

from .errors import BranchAmbiguityError, DegenerateTwistError, InvalidArgumentError

SMALL_ANGLE = 1e-8
SERIES_ANGLE = 1e-4
PITCH_TOL = 1e-6
BRANCH_MARGIN = 1e-6
DEFAULT_LAMBDA = 0.1  # m/rad


def _frozen(x, shape) -> np.ndarray:
    arr = np.array(x, dtype=float).reshape(shape)
    arr.setflags(write=False)
    return arr


def skew(w) -> np.ndarray:
    return np.array([[0.0, -w[2], w[1]], [w[2], 0.0, -w[0]], [-w[1], w[0], 0.0]])


def vee(m) -> np.ndarray:
    return np.array([m[2, 1], m[0, 2], m[1, 0]])


def rotation_angle(R) -> float:
    """Geodesic angle of a rotation matrix, in [0, pi]."""
    s = 0.5 * math.sqrt(
        (R[2, 1] - R[1, 2]) ** 2 + (R[0, 2] - R[2, 0]) ** 2 + (R[1, 0] - R[0, 1]) ** 2
    )
    c = 0.5 * (R[0, 0] + R[1, 1] + R[2, 2] - 1.0)
    return math.atan2(s, c)


def rotation_angles(Rs: np.ndarray) -> np.ndarray:
    """Vectorised :func:`rotation_angle` over a stack ``(..., 3, 3)``."""
    a = Rs[..., 2, 1] - Rs[..., 1, 2]
    b = Rs[..., 0, 2] - Rs[..., 2, 0]
    c = Rs[..., 1, 0] - Rs[..., 0, 1]
    s = 0.5 * np.sqrt(a * a + b * b + c * c)
    cos = 0.5 * (Rs[..., 0, 0] + Rs[..., 1, 1] + Rs[..., 2, 2] - 1.0)
    return np.arctan2(s, cos)


def axis_angle_matrix(axis, angle: float) -> np.ndarray:
    """Rodrigues rotation about a unit ``axis``."""
    K = skew(axis)
    return np.eye(3) + math.sin(angle) * K + (1.0 - math.cos(angle)) * (K @ K)


def so3_exp(omega) -> np.ndarray:
    omega = np.asarray(omega, dtype=float)
    th = float(np.linalg.norm(omega))
    if th < SMALL_ANGLE:
        K = skew(omega)
        return np.eye(3) + K + 0.5 * (K @ K)
    return axis_angle_matrix(omega / th, th)


class JointType(str, Enum):
    PRISMATIC = "prismatic"
    REVOLUTE = "revolute"
    REVOLUTE3D = "revolute3d"

    @property
    def rotational(self) -> bool:
        return self is not JointType.PRISMATIC

    def __str__(self) -> str:
        return self.value


@dataclass(frozen=True, eq=False)
class Pose:
    """Rigid transform ``x -> R x + t``. Compose with ``a @ b``."""

    rotation: np.ndarray
    translation: np.ndarray

    def __post_init__(self):
        R = _frozen(self.rotation, (3, 3))
        t = _frozen(self.translation, (3,))
        if not (np.all(np.isfinite(R)) and np.all(np.isfinite(t))):
            raise InvalidArgumentError("pose contains non-finite values")
        if np.max(np.abs(R.T @ R - np.eye(3))) > 1e-9 or abs(np.linalg.det(R) - 1.0) > 1e-9:
            raise InvalidArgumentError("rotation is not a proper orthonormal matrix")
        object.__setattr__(self, "rotation", R)
        object.__setattr__(self, "translation", t)

    @classmethod
    def identity(cls) -> Pose:
        return cls(np.eye(3), np.zeros(3))

    @classmethod
    def from_matrix(cls, T) -> Pose:
        T = np.asarray(T, dtype=float)
        return cls(T[:3, :3], T[:3, 3])

    @classmethod
    def from_quaternion(cls, wxyz, translation) -> Pose:
        w, x, y, z = (float(v) for v in wxyz)
        n = math.sqrt(w * w + x * x + y * y + z * z)
        if n == 0.0:
            raise InvalidArgumentError("zero quaternion")
        R = _SciRotation.from_quat([x / n, y / n, z / n, w / n]).as_matrix()
        return cls(R, translation)

    @property
    def quaternion(self) -> np.ndarray:
        """Unit quaternion ``(w, x, y, z)`` with ``w >= 0``."""
        x, y, z, w = _SciRotation.from_matrix(self.rotation).as_quat()
        q = np.array([w, x, y, z])
        return -q if w < 0 else q

    def as_matrix(self) -> np.ndarray:
        T = np.eye(4)
        T[:3, :3] = self.rotation
        T[:3, 3] = self.translation
        return T

    def inverse(self) -> Pose:
        Rt = self.rotation.T
        return Pose(Rt, -Rt @ self.translation)

    def __matmul__(self, other: Pose) -> Pose:
        return Pose(
            self.rotation @ other.rotation,
            self.rotation @ other.translation + self.translation,
        )

    def apply(self, points) -> np.ndarray:
        return np.asarray(points, dtype=float) @ self.rotation.T + self.translation

    def __eq__(self, other):
        if not isinstance(other, Pose):
            return NotImplemented
        return bool(
            np.array_equal(self.rotation, other.rotation)
            and np.array_equal(self.translation, other.translation)
        )

    def __repr__(self):
        return f"Pose(quat={np.round(self.quaternion, 6).tolist()}, t={np.round(self.translation, 6).tolist()})"


@dataclass(frozen=True, eq=False)
class Twist:
    omega: np.ndarray
    v: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "omega", _frozen(self.omega, (3,)))
        object.__setattr__(self, "v", _frozen(self.v, (3,)))

    @classmethod
    def from_vector(cls, xi) -> Twist:
        xi = np.asarray(xi, dtype=float)
        return cls(xi[:3], xi[3:])

    def as_vector(self) -> np.ndarray:
        return np.concatenate([self.omega, self.v])

    def __repr__(self):
        return f"Twist(omega={self.omega.tolist()}, v={self.v.tolist()})"


@dataclass(frozen=True, eq=False)
class ScrewAxis:
    """A screw: line through ``q`` along unit ``s_hat`` with ``pitch``.

    Prismatic axes carry ``pitch = inf``. Rotational axes normally carry
    ``pitch = 0``; a nonzero finite pitch only comes out of
    :func:`twist_to_screw` on helical input and is exposed through
    :attr:`general_pitch`.
    """

    joint_type: JointType
    q: np.ndarray
    s_hat: np.ndarray
    pitch: float = 0.0

    def __post_init__(self):
        jt = JointType(self.joint_type)
        object.__setattr__(self, "joint_type", jt)
        q = _frozen(self.q, (3,))
        s = _frozen(self.s_hat, (3,))
        if not (np.all(np.isfinite(q)) and np.all(np.isfinite(s))):
            raise InvalidArgumentError("axis contains non-finite values")
        if abs(np.linalg.norm(s) - 1.0) > 1e-9:
            raise InvalidArgumentError(f"s_hat must be unit length, got norm {np.linalg.norm(s)}")
        pitch = float(self.pitch)
        if jt is JointType.PRISMATIC:
            pitch = math.inf
        elif not math.isfinite(pitch):
            raise InvalidArgumentError("infinite pitch requires a prismatic joint")
        object.__setattr__(self, "q", q)
        object.__setattr__(self, "s_hat", s)
        object.__setattr__(self, "pitch", pitch)

    @property
    def general_pitch(self) -> bool:
        return self.joint_type.rotational and abs(self.pitch) > PITCH_TOL

    def replace(self, **kw) -> ScrewAxis:
        fields = dict(joint_type=self.joint_type, q=self.q, s_hat=self.s_hat, pitch=self.pitch)
        fields.update(kw)
        return ScrewAxis(**fields)

    def to_json(self) -> dict:
        return {
            "type": self.joint_type.value,
            "q": [float(v) for v in self.q],
            "s_hat": [float(v) for v in self.s_hat],
            "pitch": "inf" if math.isinf(self.pitch) else float(self.pitch),
        }

    @classmethod
    def from_json(cls, d: dict) -> ScrewAxis:
        try:
            jt = JointType(d["type"])
            pitch = d.get("pitch", "inf" if jt is JointType.PRISMATIC else 0.0)
            pitch = math.inf if pitch in ("inf", "Infinity") else float(pitch)
            s = np.asarray(d["s_hat"], dtype=float)
            n = np.linalg.norm(s)
            if abs(n - 1.0) > 1e-6:
                raise InvalidArgumentError(f"s_hat must be unit length, got norm {n:.6g}")
            return cls(jt, d["q"], s / n, pitch)
        except (KeyError, TypeError, ValueError) as exc:
            if isinstance(exc, InvalidArgumentError):
                raise
            raise InvalidArgumentError(f"bad screw axis object: {exc}") from exc

    def __repr__(self):
        return (
            f"ScrewAxis({self.joint_type.value}, q={np.round(self.q, 6).tolist()}, "
            f"s_hat={np.round(self.s_hat, 6).tolist()}, pitch={self.pitch})"
        )


class AxisError(NamedTuple):
    distance: float  # m
    angle: float  # degrees, in [0, 90]


def exp_coords(xi: Twist) -> Pose:
    """Matrix exponential of a twist, in closed form."""
    omega = np.asarray(xi.omega, dtype=float)
    v = np.asarray(xi.v, dtype=float)
    if not (np.all(np.isfinite(omega)) and np.all(np.isfinite(v))):
        raise InvalidArgumentError("twist must be finite")
    th = float(np.linalg.norm(omega))
    W = skew(omega)
    W2 = W @ W
    if th < SERIES_ANGLE:
        # series of sin/th, (1-cos)/th^2, (th-sin)/th^3; the closed forms cancel badly here
        t2 = th * th
        a = 1.0 - t2 / 6.0 + t2 * t2 / 120.0
        b = 0.5 - t2 / 24.0 + t2 * t2 / 720.0
        c = 1.0 / 6.0 - t2 / 120.0 + t2 * t2 / 5040.0
    else:
        a = math.sin(th) / th
        b = (1.0 - math.cos(th)) / (th * th)
        c = (th - math.sin(th)) / (th ** 3)
    R = np.eye(3) + a * W + b * W2
    V = np.eye(3) + b * W + c * W2
    return Pose(R, V @ v)


def log_pose(T: Pose) -> Twist:
    """Principal matrix logarithm. Refuses rotations within 1e-6 of pi."""
    R = T.rotation
    th = rotation_angle(R)
    if th >= math.pi - BRANCH_MARGIN:
        raise BranchAmbiguityError(
            f"rotation angle {th:.9f} rad is at the pi branch cut; subdivide the motion"
        )
    a = vee(R - R.T)  # = 2 sin(th) * axis
    if th < SERIES_ANGLE:
        # th / (2 sin th) ~ 1/2 + th^2/12
        omega = a * (0.5 + th * th / 12.0)
    else:
        omega = a * (th / (2.0 * math.sin(th)))
    W = skew(omega)
    if th < SERIES_ANGLE:
        coef = 1.0 / 12.0 + th * th / 720.0
    else:
        coef = (1.0 - th * math.sin(th) / (2.0 * (1.0 - math.cos(th)))) / (th * th)
    Vinv = np.eye(3) - 0.5 * W + coef * (W @ W)
    return Twist(omega, Vinv @ T.translation)


def screw_to_twist(axis: ScrewAxis, theta: float) -> Twist:
    """Exponential coordinates of a displacement ``theta`` along ``axis``.

    ``theta`` is meters for prismatic axes and radians otherwise.
    """
    theta = float(theta)
    if not math.isfinite(theta):
        raise InvalidArgumentError("theta must be finite")
    s = axis.s_hat
    if axis.joint_type is JointType.PRISMATIC:
        return Twist(np.zeros(3), s * theta)
    w = s * theta
    return Twist(w, -np.cross(w, axis.q) + axis.pitch * w)


def twist_to_screw(xi: Twist, pitch_tol: float = PITCH_TOL) -> ScrewAxis:
    """Recover the (canonical) screw axis a twist moves along.

    A rotational twist whose pitch exceeds ``pitch_tol`` comes back as a
    revolute axis carrying that pitch, with ``general_pitch`` set.
    """
    omega = np.asarray(xi.omega, dtype=float)
    v = np.asarray(xi.v, dtype=float)
    wn = float(np.linalg.norm(omega))
    if wn > SMALL_ANGLE:
        s = omega / wn
        q = np.cross(s, v) / wn
        pitch = float(s @ v) / wn
        if abs(pitch) < pitch_tol:
            pitch = 0.0
        return canonicalize_axis(ScrewAxis(JointType.REVOLUTE, q, s, pitch))
    vn = float(np.linalg.norm(v))
    if vn > SMALL_ANGLE:
        return canonicalize_axis(ScrewAxis(JointType.PRISMATIC, np.zeros(3), v / vn, math.inf))
    raise DegenerateTwistError("twist has neither rotation nor translation")


def canonical_direction(s) -> np.ndarray:
    """Normalise ``s`` and flip it so its first significant component is positive."""
    s = np.asarray(s, dtype=float)
    n = float(np.linalg.norm(s))
    if n < SMALL_ANGLE:
        raise InvalidArgumentError("axis direction is zero")
    s = s / n
    for c in s:
        if abs(c) > 1e-9:
            return -s if c < 0 else s
    return s


def canonicalize_axis(axis: ScrewAxis) -> ScrewAxis:
    s = canonical_direction(axis.s_hat)
    q = np.asarray(axis.q, dtype=float)
    q = q - (q @ s) * s
    return ScrewAxis(axis.joint_type, q, s, axis.pitch)


def _perp_norm(d, s) -> float:
    return float(np.linalg.norm(d - (d @ s) * s))


def axis_error(a: ScrewAxis, b: ScrewAxis) -> AxisError:
    """Line-to-line distance (m) and unsigned direction angle (deg)."""
    sa, sb = a.s_hat, b.s_hat
    c = np.cross(sa, sb)
    cn = float(np.linalg.norm(c))
    angle = math.degrees(math.atan2(cn, abs(float(sa @ sb))))
    d = b.q - a.q
    if cn > 1e-12:
        dist = abs(float(d @ c)) / cn
    else:
        # averaging both projections keeps the result exactly symmetric
        dist = 0.5 * (_perp_norm(d, sa) + _perp_norm(d, sb))
    return AxisError(dist, angle)


def pose_distance(a: Pose, b: Pose, lam: float = DEFAULT_LAMBDA) -> float:
    """``|t_a - t_b| + lam * angle(R_a^T R_b)``."""
    if lam <= 0:
        raise InvalidArgumentError("lambda must be positive")
    dt = float(np.linalg.norm(a.translation - b.translation))
    return dt + lam * rotation_angle(a.rotation.T @ b.rotation)


def pose_distances(Ra, ta, Rb, tb, lam: float = DEFAULT_LAMBDA) -> np.ndarray:
    """Broadcasting :func:`pose_distance` over stacked rotations/translations."""
    dt = np.linalg.norm(ta - tb, axis=-1)
    M = np.swapaxes(Ra, -1, -2) @ Rb
    return dt + lam * rotation_angles(M)


def axis_displacements(axis: ScrewAxis, thetas) -> tuple[np.ndarray, np.ndarray]:
    """Stacked ``exp([S] theta)`` for an array of ``theta``; returns ``(R, t)``."""
    thetas = np.asarray(thetas, dtype=float)
    shape = thetas.shape
    th = thetas.reshape(-1)
    s = axis.s_hat
    if axis.joint_type is JointType.PRISMATIC:
        R = np.broadcast_to(np.eye(3), (th.size, 3, 3)).copy()
        t = th[:, None] * s[None, :]
    else:
        K = skew(s)
        K2 = K @ K
        sn = np.sin(th)[:, None, None]
        cs = (1.0 - np.cos(th))[:, None, None]
        R = np.eye(3) + sn * K + cs * K2
        t = axis.q - R @ axis.q + axis.pitch * th[:, None] * s
    return R.reshape(shape + (3, 3)), t.reshape(shape + (3,))


def random_rotation(rng: np.random.Generator) -> np.ndarray:
    return _SciRotation.random(random_state=rng).as_matrix()


def random_unit_vector(rng: np.random.Generator) -> np.ndarray:
    v = rng.normal(size=3)
    return v / np.linalg.norm(v)
