"""Readers and writers for every on-disk format.

Floats in data files are written with ``repr`` so that a write/read cycle is
lossless. Schema problems raise :class:`ValidationError` with the file and,
where it applies, the row and column.
"""

from __future__ import annotations

import csv
import json
import math
import os
from pathlib import Path
from typing import Iterable, Optional, Sequence

import numpy as np

from .augment import Dataset, Example, PointCloud, Provenance
from .cem import CemConfig, OptRun, RewardFlags
from .errors import InvalidArgumentError, ValidationError
from .fitting import NoiseLevelRow, relative_trajectory
from .scenarios import ScenarioConfig
from .se3 import Pose, ScrewAxis
from .sim import EpisodeResult, Mechanism
from .trajectory import HandTrajectory
from .waypoints import BimanualWaypoints, ScrewAction, WaypointPlan

TRAJ_HEADER = ["t", "px", "py", "pz", "qw", "qx", "qy", "qz"]
WAYPOINT_HEADER = ["k", "side", "px", "py", "pz", "qw", "qx", "qy", "qz"]
NOISE_HEADER = [
    "level",
    "sigma_pos_m",
    "sigma_rot_deg",
    "mean_dist_m",
    "std_dist_m",
    "mean_angle_deg",
    "std_angle_deg",
    "failures",
]
QUAT_NORM_BAND = (0.99, 1.01)


def _f(x) -> str:
    return repr(float(x))


def write_text_atomic(path, text: str):
    """Write via a sibling temp file so a failed write leaves nothing behind."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(path.name + ".tmp")
    with open(tmp, "w", newline="") as fh:
        fh.write(text)
    os.replace(tmp, path)


def write_json(path, obj):
    write_text_atomic(path, json.dumps(obj, indent=2, sort_keys=True) + "\n")


def read_json(path) -> dict:
    try:
        with open(path) as fh:
            return json.load(fh)
    except json.JSONDecodeError as exc:
        raise ValidationError(f"invalid JSON: {exc.msg}", row=exc.lineno, path=path) from exc


def _rows(path, header):
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            got = next(reader)
        except StopIteration:
            raise ValidationError("file is empty", path=path) from None
        if [h.strip() for h in got] != header:
            raise ValidationError(f"header must be {','.join(header)}", row=0, path=path)
        for i, row in enumerate(reader, start=1):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != len(header):
                raise ValidationError(f"expected {len(header)} fields, got {len(row)}", row=i, path=path)
            yield i, dict(zip(header, (c.strip() for c in row)))


def _number(rec, col, row, path) -> float:
    try:
        v = float(rec[col])
    except ValueError:
        raise ValidationError(f"not a number: {rec[col]!r}", row=row, column=col, path=path) from None
    if not math.isfinite(v):
        raise ValidationError("value must be finite", row=row, column=col, path=path)
    return v


def _pose_from_record(rec, row, path) -> Pose:
    p = [_number(rec, c, row, path) for c in ("px", "py", "pz")]
    q = np.array([_number(rec, c, row, path) for c in ("qw", "qx", "qy", "qz")])
    n = float(np.linalg.norm(q))
    if not QUAT_NORM_BAND[0] <= n <= QUAT_NORM_BAND[1]:
        raise ValidationError(f"quaternion norm {n:.6g} outside {list(QUAT_NORM_BAND)}", row=row, path=path)
    return Pose.from_quaternion(q / n, p)


def _pose_fields(pose: Pose) -> list[str]:
    return [_f(v) for v in pose.translation] + [_f(v) for v in pose.quaternion]


# trajectories


def read_trajectory_csv(path, frame_id: Optional[str] = None) -> HandTrajectory:
    times, poses = [], []
    for i, rec in _rows(path, TRAJ_HEADER):
        times.append(_number(rec, "t", i, path))
        poses.append(_pose_from_record(rec, i, path))
        if len(times) > 1 and times[-1] <= times[-2]:
            raise ValidationError("timestamps must be strictly increasing", row=i, column="t", path=path)
    if not poses:
        raise ValidationError("no samples", path=path)
    return HandTrajectory(frame_id or Path(path).stem, np.array(times), tuple(poses))


def trajectory_csv_text(times: Sequence[float], poses: Sequence[Pose]) -> str:
    lines = [",".join(TRAJ_HEADER)]
    for t, p in zip(times, poses):
        lines.append(",".join([_f(t)] + _pose_fields(p)))
    return "\n".join(lines) + "\n"


def write_trajectory_csv(path, traj):
    write_text_atomic(path, trajectory_csv_text(traj.times, traj.poses))


def load_demo(left_path, right_path, meta_path):
    """Demonstration files to ``(relative trajectory, g_l, g_r)``."""
    left = read_trajectory_csv(left_path, "left")
    right = read_trajectory_csv(right_path, "right")
    meta = read_json(meta_path)
    grasp = []
    for key in ("g_l", "g_r"):
        try:
            g = np.asarray(meta[key], dtype=float).reshape(3)
        except (KeyError, TypeError, ValueError):
            raise ValidationError(f"{key} must be a list of 3 numbers (m)", column=key, path=meta_path) from None
        if not np.all(np.isfinite(g)):
            raise ValidationError(f"{key} must be finite", column=key, path=meta_path)
        grasp.append(g)
    return relative_trajectory(left, right), grasp[0], grasp[1]


# waypoints


def waypoints_csv_text(wps: BimanualWaypoints) -> str:
    lines = [",".join(WAYPOINT_HEADER)]
    for k, (L, R) in enumerate(zip(wps.left, wps.right)):
        lines.append(",".join([str(k), "left"] + _pose_fields(L)))
        lines.append(",".join([str(k), "right"] + _pose_fields(R)))
    return "\n".join(lines) + "\n"


def write_waypoints_csv(path, wps: BimanualWaypoints):
    write_text_atomic(path, waypoints_csv_text(wps))


def read_waypoints_csv(path) -> BimanualWaypoints:
    sides = {"left": {}, "right": {}}
    for i, rec in _rows(path, WAYPOINT_HEADER):
        try:
            k = int(rec["k"])
        except ValueError:
            raise ValidationError(f"k must be an integer, got {rec['k']!r}", row=i, column="k", path=path) from None
        side = rec["side"]
        if side not in sides:
            raise ValidationError("side must be left or right", row=i, column="side", path=path)
        if k in sides[side]:
            raise ValidationError(f"duplicate {side} waypoint {k}", row=i, column="k", path=path)
        sides[side][k] = _pose_from_record(rec, i, path)
    n = len(sides["left"])
    for side, d in sides.items():
        if sorted(d) != list(range(n)):
            raise ValidationError(f"{side} waypoints must be numbered 0..{n - 1} on both sides", path=path)
    if n < 2:
        raise ValidationError("need at least 2 waypoints", path=path)
    left = tuple(sides["left"][k] for k in range(n))
    right = tuple(sides["right"][k] for k in range(n))
    rel = tuple(L.inverse() @ R for L, R in zip(left, right))
    return BimanualWaypoints(left, right, rel)


# small JSON helpers


def pose_to_json(p: Pose) -> dict:
    return {"quaternion_wxyz": [float(v) for v in p.quaternion], "translation_m": [float(v) for v in p.translation]}


def pose_from_json(d) -> Pose:
    q = np.asarray(d["quaternion_wxyz"], dtype=float)
    n = float(np.linalg.norm(q))
    if not QUAT_NORM_BAND[0] <= n <= QUAT_NORM_BAND[1]:
        raise InvalidArgumentError(f"quaternion norm {n:.6g} outside {list(QUAT_NORM_BAND)}")
    return Pose.from_quaternion(q / n, d["translation_m"])


def _parse(what, path, fn, d):
    try:
        return fn(d)
    except ValidationError:
        raise
    except (KeyError, TypeError, ValueError, InvalidArgumentError) as exc:
        detail = f"missing key {exc}" if isinstance(exc, KeyError) else str(exc)
        raise ValidationError(f"bad {what}: {detail}", path=path) from exc


def action_to_json(action: ScrewAction, tau_path: Optional[str] = None) -> dict:
    return {
        "g_l": [float(v) for v in action.g_l],
        "g_r": [float(v) for v in action.g_r],
        "axis": action.axis.to_json(),
        "tau_l": tau_path,
    }


def action_from_json(d, base_dir=".") -> ScrewAction:
    tau = None
    if d.get("tau_l"):
        tau = read_trajectory_csv(Path(base_dir) / d["tau_l"], "left")
    return ScrewAction(d["g_l"], d["g_r"], ScrewAxis.from_json(d["axis"]), tau)


def load_action(path) -> ScrewAction:
    return _parse("screw action", path, lambda d: action_from_json(d, Path(path).parent), read_json(path))


def load_axis(path) -> ScrewAxis:
    d = read_json(path)
    d = d.get("axis", d) if isinstance(d, dict) else d
    return _parse("screw axis", path, ScrewAxis.from_json, d)


def plan_to_json(plan: WaypointPlan) -> dict:
    return {"theta_total": plan.theta_total, "k_steps": plan.k_steps, "t_initial": pose_to_json(plan.t_initial)}


def plan_from_json(d) -> WaypointPlan:
    t0 = pose_from_json(d["t_initial"]) if "t_initial" in d else Pose.identity()
    return WaypointPlan(float(d["theta_total"]), int(d["k_steps"]), t0)


def load_plan(path) -> WaypointPlan:
    return _parse("waypoint plan", path, plan_from_json, read_json(path))


MECH_KEYS = {
    "friction": "friction",
    "k_pos": "k_pos_per_m",
    "k_rot": "k_rot_per_rad",
    "f_min": "f_min",
    "f_max": "f_max",
    "d_grasp": "d_grasp_m",
    "theta_success_fraction": "theta_success_fraction",
    "lam": "lambda_m_per_rad",
}


def mechanism_to_json(m: Mechanism) -> dict:
    d = {"true_axis": m.true_axis.to_json(), "t_initial": pose_to_json(m.t_initial), "theta_range": list(m.theta_range)}
    for attr, key in MECH_KEYS.items():
        d[key] = float(getattr(m, attr))
    return d


def mechanism_from_json(d) -> Mechanism:
    kw = {attr: float(d[key]) for attr, key in MECH_KEYS.items() if key in d}
    return Mechanism(
        ScrewAxis.from_json(d["true_axis"]), pose_from_json(d["t_initial"]), tuple(d["theta_range"]), **kw
    )


def load_mechanism(path) -> Mechanism:
    return _parse("mechanism", path, mechanism_from_json, read_json(path))


def cem_config_to_json(c: CemConfig) -> dict:
    return {
        "n_epochs": c.n_epochs,
        "episodes_per_epoch": c.episodes_per_epoch,
        "elite_count": c.elite_count,
        "sigma0": list(c.sigma0),
        "sigma_floor": c.sigma_floor,
        "seed": c.seed,
        "stop_on_success": c.stop_on_success,
        "reward_flags": {
            "use_grasp_lost": c.reward_flags.use_grasp_lost,
            "use_mean_wrench": c.reward_flags.use_mean_wrench,
        },
    }


def cem_config_from_json(d) -> CemConfig:
    base = CemConfig()
    flags = d.get("reward_flags", {})
    return CemConfig(
        n_epochs=int(d.get("n_epochs", base.n_epochs)),
        episodes_per_epoch=int(d.get("episodes_per_epoch", base.episodes_per_epoch)),
        elite_count=int(d.get("elite_count", base.elite_count)),
        sigma0=tuple(d.get("sigma0", base.sigma0)),
        sigma_floor=float(d.get("sigma_floor", base.sigma_floor)),
        seed=int(d.get("seed", base.seed)),
        stop_on_success=bool(d.get("stop_on_success", base.stop_on_success)),
        reward_flags=RewardFlags(bool(flags.get("use_grasp_lost", True)), bool(flags.get("use_mean_wrench", True))),
    )


def scenario_to_json(s: ScenarioConfig) -> dict:
    return {
        "name": s.name,
        "mechanism": mechanism_to_json(s.mechanism),
        "plan": plan_to_json(s.plan),
        "init_perturbation": {"dq_m": s.init_perturbation[0], "ds_deg": s.init_perturbation[1]},
        "cem": cem_config_to_json(s.cem),
        "left_path": s.left_path,
        "right_path": s.right_path,
        "meta_path": s.meta_path,
        "cloud_path": s.cloud_path,
    }


def scenario_from_json(d, base_dir=".") -> ScenarioConfig:
    paths = {}
    for key in ("left_path", "right_path", "meta_path", "cloud_path"):
        p = d.get(key)
        if p:
            full = Path(base_dir) / p
            if not full.is_file():
                raise ValidationError(f"referenced file does not exist: {p}", column=key)
            p = str(full)
        paths[key] = p
    ip = d.get("init_perturbation", {"dq_m": 0.02, "ds_deg": 8.0})
    return ScenarioConfig(
        name=str(d["name"]),
        mechanism=mechanism_from_json(d["mechanism"]),
        plan=plan_from_json(d["plan"]),
        init_perturbation=(float(ip["dq_m"]), float(ip["ds_deg"])),
        cem=cem_config_from_json(d.get("cem", {})),
        **paths,
    )


def load_scenario(path) -> ScenarioConfig:
    return _parse("scenario config", path, lambda d: scenario_from_json(d, Path(path).parent), read_json(path))


# results


def episode_record(ep: EpisodeResult) -> dict:
    return ep.to_json()


def jsonl_text(records: Iterable[dict]) -> str:
    return "".join(json.dumps(r, sort_keys=True) + "\n" for r in records)


def write_optrun(path_jsonl, path_summary, run: OptRun):
    write_text_atomic(path_jsonl, jsonl_text(s.to_json() for s in run.history))
    write_json(path_summary, run.summary())


def read_jsonl(path) -> list[dict]:
    out = []
    with open(path) as fh:
        for i, line in enumerate(fh, start=1):
            if line.strip():
                try:
                    out.append(json.loads(line))
                except json.JSONDecodeError as exc:
                    raise ValidationError(f"invalid JSON: {exc.msg}", row=i, path=path) from exc
    return out


def noise_csv_text(rows: Sequence[NoiseLevelRow]) -> str:
    lines = [",".join(NOISE_HEADER)]
    for r in rows:
        d = r.csv_row()
        lines.append(",".join(str(d[h]) if h in ("level", "failures") else _f(d[h]) for h in NOISE_HEADER))
    return "\n".join(lines) + "\n"


def write_noise_csv(path, rows):
    write_text_atomic(path, noise_csv_text(rows))


def read_noise_csv(path) -> list[dict]:
    out = []
    for i, rec in _rows(path, NOISE_HEADER):
        out.append({h: (int(rec[h]) if h in ("level", "failures") else float(rec[h])) for h in NOISE_HEADER})
    return out


# point clouds and datasets


def read_cloud(path) -> PointCloud:
    pts = []
    with open(path) as fh:
        for i, line in enumerate(fh, start=1):
            s = line.strip()
            if not s or s.startswith("#"):
                continue
            parts = s.split()
            if len(parts) != 3:
                raise ValidationError(f"expected 3 coordinates, got {len(parts)}", row=i, path=path)
            try:
                xyz = [float(v) for v in parts]
            except ValueError:
                raise ValidationError(f"not a number in {s!r}", row=i, path=path) from None
            if not all(math.isfinite(v) for v in xyz):
                raise ValidationError("coordinates must be finite", row=i, path=path)
            pts.append(xyz)
    if not pts:
        raise ValidationError("no points", path=path)
    return PointCloud(np.array(pts))


def cloud_text(cloud: PointCloud) -> str:
    return "".join(f"{_f(x)} {_f(y)} {_f(z)}\n" for x, y, z in cloud.points)


def write_cloud(path, cloud: PointCloud):
    write_text_atomic(path, cloud_text(cloud))


INDEX_FILE = "index.txt"


def save_dataset(directory, ds: Dataset):
    """``examples/<id>.json`` plus ``examples/<id>.xyz`` per example; ids listed in ``index.txt``."""
    root = Path(directory)
    ex_dir = root / "examples"
    ex_dir.mkdir(parents=True, exist_ok=True)
    for ex in ds:
        cloud_name = f"{ex.example_id}.xyz"
        tau_name = None
        if ex.action.tau_l is not None:
            tau_name = f"{ex.example_id}.tau_l.csv"
            write_trajectory_csv(ex_dir / tau_name, ex.action.tau_l)
        write_cloud(ex_dir / cloud_name, ex.cloud)
        write_json(
            ex_dir / f"{ex.example_id}.json",
            {
                "id": ex.example_id,
                "action": action_to_json(ex.action, tau_name),
                "provenance": ex.provenance.value,
                "parent_id": ex.parent_id,
                "cloud": cloud_name,
            },
        )
    write_text_atomic(root / INDEX_FILE, "".join(f"{i}\n" for i in ds.ids))


def load_dataset(directory) -> Dataset:
    root = Path(directory)
    index = root / INDEX_FILE
    if not index.is_file():
        raise ValidationError("dataset index not found", path=index)
    ids = [line.strip() for line in index.read_text().splitlines() if line.strip()]
    examples = []
    for eid in ids:
        path = root / "examples" / f"{eid}.json"
        d = read_json(path)

        def build(d, path=path):
            return Example(
                read_cloud(path.parent / d["cloud"]),
                action_from_json(d["action"], path.parent),
                Provenance(d["provenance"]),
                d.get("parent_id"),
                d["id"],
            )

        examples.append(_parse("dataset example", path, build, d))
    return Dataset(examples)
