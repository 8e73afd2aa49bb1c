"""Screw-axis bimanual actions: fitting, waypoint generation, simulated execution and fine-tuning."""

from .se3 import AxisError, JointType, Pose, ScrewAxis, Twist, axis_error, exp_coords, log_pose, screw_to_twist, twist_to_screw
from .trajectory import HandTrajectory, RelativeTrajectory
from .fitting import FitResult, fit_axis, model_score, select_joint_type
from .waypoints import ScrewAction, WaypointPlan, compose_bimanual, generate_relative_waypoints
from .sim import EpisodeResult, Failure, Mechanism, is_success, project_to_mechanism, run_episode
from .cem import CemConfig, OptRun, RewardFlags, optimize, optimize_waypoint_space
from .augment import AugmentSpec, Dataset, Example, PointCloud, augment_dataset, extend_with_corrected, predict_action

__version__ = "0.1.0"

__all__ = [
    "AxisError",
    "JointType",
    "Pose",
    "ScrewAxis",
    "Twist",
    "axis_error",
    "exp_coords",
    "log_pose",
    "screw_to_twist",
    "twist_to_screw",
    "HandTrajectory",
    "RelativeTrajectory",
    "FitResult",
    "fit_axis",
    "model_score",
    "select_joint_type",
    "ScrewAction",
    "WaypointPlan",
    "compose_bimanual",
    "generate_relative_waypoints",
    "EpisodeResult",
    "Failure",
    "Mechanism",
    "is_success",
    "project_to_mechanism",
    "run_episode",
    "CemConfig",
    "OptRun",
    "RewardFlags",
    "optimize",
    "optimize_waypoint_space",
    "AugmentSpec",
    "Dataset",
    "Example",
    "PointCloud",
    "augment_dataset",
    "extend_with_corrected",
    "predict_action",
]
