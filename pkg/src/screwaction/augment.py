"""Dataset growth by similarity transforms, and a retrieval-based action predictor.

A stored example is an object point cloud paired with the screw action that
manipulates it. Augmentation moves, yaws and rescales the cloud about its
centroid and carries the action along in closed form. Prediction normalises
clouds for position and size, retrieves the nearest stored cloud by Chamfer
distance, recovers the yaw between the two, and maps the stored action across.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Optional, Sequence

import numpy as np
from scipy.spatial import cKDTree

from ._search import golden_section
from .errors import InvalidArgumentError, NoModelError
from .se3 import Pose, axis_angle_matrix, canonicalize_axis, random_unit_vector
from .trajectory import HandTrajectory
from .waypoints import ScrewAction

MIN_QUERY_POINTS = 32
MAX_CHAMFER_POINTS = 512
YAW_GRID = 36
YAW_TOL = 1e-7
Z_AXIS = np.array([0.0, 0.0, 1.0])


class Provenance(str, Enum):
    DEMONSTRATION = "demonstration"
    AUGMENTED = "augmented"
    CORRECTED = "corrected"

    def __str__(self):
        return self.value


@dataclass(frozen=True, eq=False)
class PointCloud:
    points: np.ndarray

    def __post_init__(self):
        p = np.array(self.points, dtype=float)
        if p.ndim != 2 or p.shape[1] != 3 or len(p) == 0:
            raise InvalidArgumentError("a point cloud is a non-empty (n, 3) array")
        if not np.all(np.isfinite(p)):
            raise InvalidArgumentError("point coordinates must be finite")
        p.setflags(write=False)
        object.__setattr__(self, "points", p)

    def __len__(self):
        return len(self.points)

    @property
    def centroid(self) -> np.ndarray:
        return self.points.mean(axis=0)


@dataclass(frozen=True, eq=False)
class Example:
    cloud: PointCloud
    action: ScrewAction
    provenance: Provenance = Provenance.DEMONSTRATION
    parent_id: Optional[str] = None
    example_id: Optional[str] = None

    def __post_init__(self):
        object.__setattr__(self, "provenance", Provenance(self.provenance))
        if self.provenance is Provenance.CORRECTED and not self.parent_id:
            raise InvalidArgumentError("a corrected example must name the example it corrects")


@dataclass(frozen=True)
class AugmentSpec:
    n_samples: int = 100
    translation_range: tuple = (0.3, 0.3, 0.3)  # m, symmetric per axis
    yaw_only: bool = True
    max_angle_deg: float = 180.0
    scale_range: tuple = (0.8, 1.2)
    seed: int = 0

    def __post_init__(self):
        if int(self.n_samples) != self.n_samples or self.n_samples < 1:
            raise InvalidArgumentError("n_samples must be a positive integer")
        tr = np.broadcast_to(np.asarray(self.translation_range, dtype=float), (3,))
        if np.any(tr < 0):
            raise InvalidArgumentError("translation_range must be nonnegative")
        lo, hi = (float(v) for v in self.scale_range)
        if not 0 < lo <= hi:
            raise InvalidArgumentError("scale_range needs 0 < lo <= hi")
        if not 0 <= self.max_angle_deg <= 180:
            raise InvalidArgumentError("max_angle_deg must be in [0, 180]")
        object.__setattr__(self, "translation_range", tuple(float(v) for v in tr))
        object.__setattr__(self, "scale_range", (lo, hi))

    def draw(self, rng: np.random.Generator):
        """One ``(t, R, s)`` uniformly within the ranges."""
        tr = np.array(self.translation_range)
        t = rng.uniform(-tr, tr)
        angle = math.radians(rng.uniform(-self.max_angle_deg, self.max_angle_deg))
        axis = Z_AXIS if self.yaw_only else random_unit_vector(rng)
        s = rng.uniform(*self.scale_range)
        return t, axis_angle_matrix(axis, angle), float(s)


class Dataset:
    """Append-only list of examples with stable string ids."""

    def __init__(self, examples: Sequence[Example] = ()):
        self._examples: list[Example] = []
        self._cache: dict = {}
        for ex in examples:
            self._append(ex)

    def _append(self, ex: Example) -> Example:
        eid = ex.example_id or f"ex{len(self._examples):05d}"
        if any(e.example_id == eid for e in self._examples):
            raise InvalidArgumentError(f"duplicate example id {eid!r}")
        ex = Example(ex.cloud, ex.action, ex.provenance, ex.parent_id, eid)
        self._examples.append(ex)
        return ex

    def __len__(self):
        return len(self._examples)

    def __iter__(self):
        return iter(self._examples)

    def __getitem__(self, i) -> Example:
        return self._examples[i]

    @property
    def ids(self) -> list[str]:
        return [e.example_id for e in self._examples]

    def get(self, example_id: str) -> Example:
        for e in self._examples:
            if e.example_id == example_id:
                return e
        raise KeyError(example_id)

    def copy(self) -> Dataset:
        d = Dataset()
        d._examples = list(self._examples)
        d._cache = dict(self._cache)
        return d

    def _normalized(self, i: int):
        """Cached ``(points, tree, centroid, rms)`` for stored example ``i``."""
        if i not in self._cache:
            self._cache[i] = _normalize(self._examples[i].cloud.points)
        return self._cache[i]


def _transform_pose(pose: Pose, R, s, c, t) -> Pose:
    return Pose(R @ pose.rotation, R @ (s * (pose.translation - c)) + c + t)


def transform_action(action: ScrewAction, c, t, R, s) -> ScrewAction:
    """Image of an action under ``p -> R (s (p - c)) + c + t``."""
    c = np.asarray(c, dtype=float)
    t = np.asarray(t, dtype=float)
    R = np.asarray(R, dtype=float)

    def move(p):
        return R @ (s * (np.asarray(p) - c)) + c + t

    ax = action.axis
    new_axis = canonicalize_axis(ax.replace(q=move(ax.q), s_hat=R @ ax.s_hat))
    tau = action.tau_l
    if tau is not None:
        tau = HandTrajectory(tau.frame_id, tau.times, tuple(_transform_pose(p, R, s, c, t) for p in tau.poses))
    return ScrewAction(move(action.g_l), move(action.g_r), new_axis, tau)


def apply_similarity(example: Example, t, R, s: float) -> Example:
    """Move, rotate and scale an example about its cloud centroid.

    Points map as ``p -> R (s (p - c)) + c + t``; grasp points, the axis point
    and the left-hand path follow the same map and the axis direction is
    rotated. The result is marked as augmented.
    """
    if not s > 0:
        raise InvalidArgumentError("scale must be positive")
    R = np.asarray(R, dtype=float)
    t = np.asarray(t, dtype=float).reshape(3)
    c = example.cloud.centroid
    pts = (s * (example.cloud.points - c)) @ R.T + c + t
    action = transform_action(example.action, c, t, R, s)
    return Example(PointCloud(pts), action, Provenance.AUGMENTED, example.example_id)


def _augment_one(ds: Dataset, parent: Example, spec: AugmentSpec, stream: int):
    rng = np.random.default_rng(np.random.SeedSequence([int(spec.seed), int(stream)]))
    for _ in range(spec.n_samples):
        t, R, s = spec.draw(rng)
        ds._append(apply_similarity(parent, t, R, s))


def augment_dataset(seeds: Sequence[Example], spec: AugmentSpec) -> Dataset:
    """Seeds followed, per seed, by ``spec.n_samples`` random similarity copies."""
    seeds = list(seeds)
    if not seeds:
        raise InvalidArgumentError("need at least one seed example")
    ds = Dataset()
    stored = [ds._append(ex) for ex in seeds]
    for i, parent in enumerate(stored):
        _augment_one(ds, parent, spec, i)
    return ds


def extend_with_corrected(dataset: Dataset, corrected: Example, spec: AugmentSpec) -> Dataset:
    """New dataset: ``dataset`` plus the corrected example and its augmentations."""
    if corrected.provenance is not Provenance.CORRECTED:
        raise InvalidArgumentError("extend_with_corrected takes a corrected example")
    ds = dataset.copy()
    parent = ds._append(corrected)
    _augment_one(ds, parent, spec, len(ds))
    return ds


def _subsample(points: np.ndarray) -> np.ndarray:
    stride = -(-len(points) // MAX_CHAMFER_POINTS)
    return points[::stride]


def _normalize(points: np.ndarray):
    c = points.mean(axis=0)
    rms = float(np.sqrt(np.mean(np.sum((points - c) ** 2, axis=1))))
    if rms <= 0:
        raise InvalidArgumentError("point cloud has zero extent")
    p = _subsample((points - c) / rms)
    return p, cKDTree(p), c, rms


def chamfer(a: np.ndarray, b: np.ndarray, tree_a=None, tree_b=None) -> float:
    """Symmetric Chamfer distance: mean nearest-neighbour distance both ways, summed."""
    tree_a = tree_a if tree_a is not None else cKDTree(a)
    tree_b = tree_b if tree_b is not None else cKDTree(b)
    return float(tree_b.query(a)[0].mean() + tree_a.query(b)[0].mean())


def _yaw(a) -> np.ndarray:
    return axis_angle_matrix(Z_AXIS, float(a))


def _best_yaw(stored, stored_tree, query, query_tree):
    """Yaw taking the stored cloud onto the query: grid, then golden refinement."""

    def cost(a):
        R = _yaw(a)
        # stored rotated into the query, and the query rotated back onto stored,
        # so both trees are built once
        return query_tree.query(stored @ R.T)[0].mean() + stored_tree.query(query @ R)[0].mean()

    grid = np.arange(YAW_GRID) * (2 * math.pi / YAW_GRID)
    vals = np.array([cost(a) for a in grid])
    j = int(np.argmin(vals))
    step = 2 * math.pi / YAW_GRID
    f = np.vectorize(cost)
    a, fa = golden_section(f, np.array([grid[j] - step]), np.array([grid[j] + step]), YAW_TOL)
    if fa[0] < vals[j]:
        return float(a[0]), float(fa[0])
    return float(grid[j]), float(vals[j])


def predict_action(dataset: Dataset, query: PointCloud) -> tuple[ScrewAction, float, str]:
    """Retrieve the closest stored example and map its action onto ``query``.

    Returns ``(action, match_score, example_id)``. The score is the unrotated
    Chamfer distance between normalised clouds; exact ties go to the most
    recently added example.
    """
    if len(dataset) == 0:
        raise NoModelError("dataset is empty")
    if len(query) < MIN_QUERY_POINTS:
        raise InvalidArgumentError(f"query needs at least {MIN_QUERY_POINTS} points, got {len(query)}")
    qp, qtree, qc, qrms = _normalize(query.points)
    best_i, best_d = -1, math.inf
    for i in range(len(dataset)):
        sp, stree, _, _ = dataset._normalized(i)
        d = chamfer(qp, sp, qtree, stree)
        if d <= best_d:
            best_i, best_d = i, d
    sp, stree, sc, srms = dataset._normalized(best_i)
    yaw, _ = _best_yaw(sp, stree, qp, qtree)
    action = transform_action(dataset[best_i].action, sc, qc - sc, _yaw(yaw), qrms / srms)
    return action, best_d, dataset[best_i].example_id
