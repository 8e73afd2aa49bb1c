"""Scenario presets: simulated analogues of the tabletop tasks.

Geometry and mechanism constants are declared configuration, chosen to be
plausible at tabletop scale; none of them are measured quantities.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .cem import CemConfig
from .errors import InvalidArgumentError
from .se3 import (
    JointType,
    Pose,
    ScrewAxis,
    axis_angle_matrix,
    canonicalize_axis,
    random_unit_vector,
)
from .sim import Mechanism
from .waypoints import WaypointPlan


@dataclass(frozen=True, eq=False)
class ScenarioConfig:
    name: str
    mechanism: Mechanism
    plan: WaypointPlan
    init_perturbation: tuple = (0.02, 8.0)  # (m, deg)
    cem: CemConfig = field(default_factory=CemConfig)
    left_path: Optional[str] = None
    right_path: Optional[str] = None
    meta_path: Optional[str] = None
    cloud_path: Optional[str] = None

    def replace(self, **kw) -> ScenarioConfig:
        d = {f: getattr(self, f) for f in self.__dataclass_fields__}
        d.update(kw)
        return ScenarioConfig(**d)


def _unit_perp(v, s, fallback_rng):
    w = v - (v @ s) * s
    n = np.linalg.norm(w)
    while n < 1e-6:
        w = random_unit_vector(fallback_rng)
        w = w - (w @ s) * s
        n = np.linalg.norm(w)
    return w / n


def perturb_axis(axis: ScrewAxis, dq: float, ds_deg: float, rng: np.random.Generator) -> ScrewAxis:
    """Axis tilted by ``ds_deg`` and shifted sideways by ``dq``, in random directions.

    The tilt pivots about the canonical point; the shift is perpendicular to
    the tilted direction, so for parallel lines it equals the line distance.
    """
    s = axis.s_hat
    tilt_about = _unit_perp(random_unit_vector(rng), s, rng)
    s2 = axis_angle_matrix(tilt_about, math.radians(ds_deg)) @ s
    shift = _unit_perp(random_unit_vector(rng), s2, rng)
    return canonicalize_axis(axis.replace(q=axis.q + dq * shift, s_hat=s2))


def _rx(a):
    return axis_angle_matrix(np.array([1.0, 0.0, 0.0]), a)


def bottle() -> ScenarioConfig:
    """Cap turned half a revolution about a vertical axis; 3 cm grasp radius."""
    axis = ScrewAxis(JointType.REVOLUTE, [0.0, 0.04, 0.0], [0.0, 0.0, 1.0], 0.0)
    T0 = Pose(_rx(math.pi / 2), [0.03, 0.04, 0.12])
    mech = Mechanism(axis, T0, (0.0, math.pi), k_pos=100.0, k_rot=2.0, d_grasp=0.08)
    return ScenarioConfig("bottle", mech, WaypointPlan(math.pi, 20, T0), (0.03, 10.0))


def zipper() -> ScenarioConfig:
    """Slider pulled 20 cm along a stiff track that it derails from at 3 cm."""
    axis = ScrewAxis(JointType.PRISMATIC, [0.0, 0.0, 0.0], [1.0, 0.0, 0.0], math.inf)
    T0 = Pose(_rx(-math.pi / 2), [0.0, 0.15, 0.05])
    axis = canonicalize_axis(axis.replace(q=T0.translation))
    mech = Mechanism(axis, T0, (0.0, 0.2), k_pos=200.0, k_rot=5.0, d_grasp=0.03)
    return ScenarioConfig("zipper", mech, WaypointPlan(0.2, 20, T0), (0.0, 12.0))


def stir() -> ScenarioConfig:
    """Ladle tip circling 6 cm around a vertical pot axis, orientation fixed."""
    axis = ScrewAxis(JointType.REVOLUTE3D, [0.05, 0.1, 0.0], [0.0, 0.0, 1.0], 0.0)
    T0 = Pose(_rx(math.pi), [0.11, 0.1, 0.15])
    mech = Mechanism(axis, T0, (0.0, 1.5 * math.pi), k_pos=100.0, k_rot=2.0, d_grasp=0.05)
    return ScenarioConfig("stir", mech, WaypointPlan(1.5 * math.pi, 24, T0), (0.015, 6.0))


def laptop() -> ScenarioConfig:
    """Lid closed 90 degrees about a horizontal hinge, grasped 20 cm from it."""
    axis = ScrewAxis(JointType.REVOLUTE, [0.0, 0.3, 0.0], [1.0, 0.0, 0.0], 0.0)
    T0 = Pose(_rx(math.pi / 2), [0.1, 0.3, 0.2])
    mech = Mechanism(axis, T0, (0.0, math.pi / 2), k_pos=100.0, k_rot=2.0, d_grasp=0.08)
    return ScenarioConfig("laptop", mech, WaypointPlan(math.pi / 2, 20, T0), (0.02, 6.0))


WIDE_DIRECTION_SIGMA = (0.02, 0.02, 0.02, 0.4, 0.4, 0.4)


def mean_wrench_ablation() -> ScenarioConfig:
    """Roll pushed almost fully into a box along a compliant guide.

    Thresholds are loose, so misaligned pushes still run to completion, but
    they slide the roll less far in. All episodes tie on length and only the
    wrench tells the well-aligned ones apart.
    """
    axis = ScrewAxis(JointType.PRISMATIC, [0.0, 0.0, 0.0], [1.0, 0.0, 0.0], math.inf)
    T0 = Pose(_rx(-math.pi / 2), [0.0, 0.1, 0.05])
    axis = canonicalize_axis(axis.replace(q=T0.translation))
    mech = Mechanism(
        axis, T0, (0.0, 0.2), k_pos=60.0, k_rot=5.0, f_max=40.0, d_grasp=0.3,
        theta_success_fraction=0.99,
    )
    cem = CemConfig(sigma0=WIDE_DIRECTION_SIGMA)
    return ScenarioConfig("roll-wrench", mech, WaypointPlan(0.2, 20, T0), (0.0, 25.0), cem)


def grasp_lost_ablation() -> ScenarioConfig:
    """Drawer pulled by a slippery handle that offers no sideways resistance.

    A tilted pull drifts off the handle without raising the wrench, so only
    the grasp detector reports how early the fingers came off.
    """
    axis = ScrewAxis(JointType.PRISMATIC, [0.0, 0.0, 0.0], [1.0, 0.0, 0.0], math.inf)
    T0 = Pose(_rx(-math.pi / 2), [0.0, 0.1, 0.05])
    axis = canonicalize_axis(axis.replace(q=T0.translation))
    mech = Mechanism(axis, T0, (0.0, 0.2), k_pos=0.0, k_rot=5.0, d_grasp=0.03)
    cem = CemConfig(sigma0=WIDE_DIRECTION_SIGMA)
    return ScenarioConfig("drawer-slip", mech, WaypointPlan(0.2, 20, T0), (0.0, 20.0), cem)


PRESETS = {
    "bottle": bottle,
    "zipper": zipper,
    "stir": stir,
    "laptop": laptop,
    "roll-wrench": mean_wrench_ablation,
    "drawer-slip": grasp_lost_ablation,
}


def get_scenario(name: str) -> ScenarioConfig:
    try:
        return PRESETS[name]()
    except KeyError:
        raise InvalidArgumentError(f"unknown scenario {name!r}; choose from {sorted(PRESETS)}") from None


def initial_axis(scn: ScenarioConfig, seed: int) -> ScrewAxis:
    """The scenario's true axis moved by its declared initial error, direction from ``seed``."""
    dq, ds = scn.init_perturbation
    rng = np.random.default_rng(np.random.SeedSequence([int(seed), 7919]))
    return perturb_axis(scn.mechanism.true_axis, dq, ds, rng)
