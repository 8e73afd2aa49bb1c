"""Timestamped pose sequences for one hand or for the hand-to-hand relation."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import AlignmentError, InvalidArgumentError
from .se3 import Pose


def _check_times(times: np.ndarray):
    if times.ndim != 1:
        raise InvalidArgumentError("timestamps must be one-dimensional")
    if times.size > 1 and np.any(np.diff(times) <= 0):
        raise InvalidArgumentError("timestamps must be strictly increasing")


@dataclass(frozen=True, eq=False)
class HandTrajectory:
    frame_id: str
    times: np.ndarray
    poses: tuple

    def __post_init__(self):
        times = np.array(self.times, dtype=float)
        _check_times(times)
        poses = tuple(self.poses)
        if len(poses) != times.size:
            raise AlignmentError(f"{times.size} timestamps but {len(poses)} poses")
        times.setflags(write=False)
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "poses", poses)

    @classmethod
    def from_poses(cls, poses: Sequence[Pose], frame_id: str = "world", dt: float = 1.0):
        return cls(frame_id, np.arange(len(poses)) * dt, tuple(poses))

    def __len__(self):
        return len(self.poses)

    def positions(self) -> np.ndarray:
        return np.array([p.translation for p in self.poses])

    def rotations(self) -> np.ndarray:
        return np.array([p.rotation for p in self.poses])


@dataclass(frozen=True, eq=False)
class RelativeTrajectory:
    """Right-hand poses expressed in the left-hand frame."""

    times: np.ndarray
    poses: tuple

    def __post_init__(self):
        times = np.array(self.times, dtype=float)
        _check_times(times)
        poses = tuple(self.poses)
        if len(poses) != times.size:
            raise AlignmentError(f"{times.size} timestamps but {len(poses)} poses")
        if not poses:
            raise InvalidArgumentError("relative trajectory needs at least one sample")
        times.setflags(write=False)
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "poses", poses)

    @classmethod
    def from_poses(cls, poses: Sequence[Pose], dt: float = 1.0) -> RelativeTrajectory:
        return cls(np.arange(len(poses)) * dt, tuple(poses))

    @property
    def t_initial(self) -> Pose:
        return self.poses[0]

    def __len__(self):
        return len(self.poses)

    def positions(self) -> np.ndarray:
        return np.array([p.translation for p in self.poses])

    def rotations(self) -> np.ndarray:
        return np.array([p.rotation for p in self.poses])
