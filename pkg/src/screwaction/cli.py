"""Command-line entry point.

Exit status: 0 on success, 2 on usage or validation errors, 1 on runtime failures.
"""

from __future__ import annotations

import argparse
import math
import sys
from pathlib import Path

import numpy as np

from . import io
from .augment import AugmentSpec, Example, Provenance, augment_dataset, extend_with_corrected, predict_action
from .cem import RewardFlags, optimize, optimize_waypoint_space
from .errors import InvalidArgumentError, ScrewError, ValidationError
from .experiments import matched_waypoint_noise, reward_ablation, run_repro
from .fitting import NoiseSpec, bottle_ground_truth, fit_axis, standard_noise_levels, run_noise_study
from .report import emit_report, summary_table
from .scenarios import PRESETS, get_scenario, initial_axis
from .se3 import JointType, Pose
from .sim import is_success, run_episode
from .waypoints import ScrewAction, WaypointPlan, compose_bimanual, generate_relative_waypoints, left_hand_poses


class UsageError(Exception):
    pass


def _scenario(args):
    if getattr(args, "config", None):
        return io.load_scenario(args.config)
    return get_scenario(args.scenario)


def _out(args, default: str) -> Path:
    return Path(args.out or default)


def cmd_fit_axis(args):
    traj, g_l, g_r = io.load_demo(args.left, args.right, args.meta)
    jt = None if args.type == "auto" else JointType(args.type)
    res = fit_axis(traj, jt, args.lam)
    action = ScrewAction(g_l, g_r, res.axis)
    io.write_json(
        _out(args, "axis.json"),
        {
            "axis": res.axis.to_json(),
            "action": io.action_to_json(action),
            "score": res.score,
            "per_type_scores": {k: (v if math.isfinite(v) else "inf") for k, v in res.per_type_scores.items()},
        },
    )
    print(f"{res.axis.joint_type.value} axis, score {res.score:.6g}")


def _plan(args, action: ScrewAction) -> WaypointPlan:
    if args.plan:
        return io.load_plan(args.plan)
    if args.theta is None:
        raise UsageError("give --plan or --theta")
    return WaypointPlan(args.theta, args.k, Pose(np.eye(3), action.g_r - action.g_l))


def cmd_gen_traj(args):
    action = io.load_action(args.action)
    plan = _plan(args, action)
    if args.left_traj:
        action = ScrewAction(action.g_l, action.g_r, action.axis, io.read_trajectory_csv(args.left_traj, "left"))
    wps = compose_bimanual(action, plan, left_hand_poses(action, plan))
    io.write_waypoints_csv(_out(args, "waypoints.csv"), wps)
    print(f"{len(wps.relative)} waypoints")


def cmd_simulate(args):
    wps = io.read_waypoints_csv(args.waypoints)
    mech = io.load_mechanism(args.mechanism) if args.mechanism else _scenario(args).mechanism
    ep = run_episode(mech, wps.relative)
    rec = ep.to_json()
    rec["success"] = is_success(mech, ep)
    io.write_json(_out(args, "episode.json"), rec)
    print(f"failure={ep.failure.value} completed={ep.completed_waypoints}/{ep.k_total}")


def _init_axis(args, scn):
    return io.load_axis(args.init_axis) if args.init_axis else initial_axis(scn, args.seed)


def _write_run(args, run, stem):
    out = _out(args, stem)
    out.mkdir(parents=True, exist_ok=True)
    io.write_optrun(out / "episodes.jsonl", out / "summary.json", run)
    s = run.summary()
    print(f"succeeded={s['succeeded']} episodes_to_success={s['episodes_to_success']} episodes={s['episodes']}")


def cmd_cem(args):
    scn = _scenario(args)
    cfg = scn.cem.replace(seed=args.seed)
    run = optimize(scn.mechanism, _init_axis(args, scn), scn.plan, cfg)
    _write_run(args, run, "cem_run")


def cmd_cem_baseline(args):
    scn = _scenario(args)
    cfg = scn.cem.replace(seed=args.seed)
    wps = generate_relative_waypoints(_init_axis(args, scn), scn.plan)
    noise = matched_waypoint_noise(cfg)
    if args.sigma_pos is not None:
        noise = (args.sigma_pos, noise[1])
    if args.sigma_rot_deg is not None:
        noise = (noise[0], args.sigma_rot_deg)
    run = optimize_waypoint_space(scn.mechanism, wps, cfg, noise)
    _write_run(args, run, "baseline_run")


def cmd_noise_study(args):
    if args.levels in ("standard", "paper"):
        levels = standard_noise_levels(args.seed)
    else:
        levels = []
        for i, tok in enumerate(args.levels.split(";")):
            pos, rot = (float(v) for v in tok.split(","))
            levels.append(NoiseSpec(pos, rot, args.seed + 1000 * (i + 1)))
    axis, plan = bottle_ground_truth()
    if args.axis:
        axis = io.load_axis(args.axis)
    if args.plan:
        plan = io.load_plan(args.plan)
    rows = run_noise_study(axis, plan, levels, args.trials)
    io.write_noise_csv(_out(args, "noise_study.csv"), rows)
    for r in rows:
        print(f"level {r.level}: {r.mean_dist_m * 100:.2f} cm, {r.mean_angle_deg:.2f} deg")


def _augment_spec(args) -> AugmentSpec:
    return AugmentSpec(
        n_samples=args.n_samples,
        translation_range=(args.translation,) * 3,
        max_angle_deg=args.max_yaw_deg,
        scale_range=(args.scale_lo, args.scale_hi),
        seed=args.seed,
    )


def cmd_augment(args):
    ex = Example(io.read_cloud(args.cloud), io.load_action(args.action), Provenance.DEMONSTRATION)
    ds = augment_dataset([ex], _augment_spec(args))
    io.save_dataset(_out(args, "dataset"), ds)
    print(f"{len(ds)} examples")


def cmd_predict(args):
    ds = io.load_dataset(args.dataset)
    action, score, eid = predict_action(ds, io.read_cloud(args.cloud))
    d = io.action_to_json(action)
    d["match_score"] = score
    d["source_id"] = eid
    io.write_json(_out(args, "predicted_action.json"), d)
    print(f"matched {eid} (score {score:.6g}), {action.axis.joint_type.value} axis")


def cmd_extend(args):
    ds = io.load_dataset(args.dataset)
    if args.parent not in ds.ids:
        raise ValidationError(f"parent id {args.parent!r} not in dataset")
    ex = Example(io.read_cloud(args.cloud), io.load_action(args.action), Provenance.CORRECTED, args.parent)
    ds2 = extend_with_corrected(ds, ex, _augment_spec(args))
    io.save_dataset(_out(args, str(args.dataset)), ds2)
    print(f"{len(ds)} -> {len(ds2)} examples")


def cmd_reward_ablation(args):
    scn = _scenario(args)
    flags = RewardFlags(use_grasp_lost=args.drop != "grasp-lost", use_mean_wrench=args.drop != "mean-wrench")
    res = reward_ablation(scn, flags, args.seed, args.seeds)
    res["scenario"] = scn.name
    res["dropped"] = args.drop
    emit_report({"reward_ablation": res}, _out(args, "reward_ablation.json"))
    print(f"{scn.name}: full {res['full_successes']}/{args.seeds}, without {args.drop} {res['ablated_successes']}/{args.seeds}")


def cmd_repro(args):
    out = _out(args, "repro")
    out.mkdir(parents=True, exist_ok=True)
    r = run_repro(args.seed, check_determinism=not args.no_determinism_check, only=args.only, log=print)
    results = r["results"]
    emit_report(results, out / "report.json")
    io.write_json(out / "timings.json", {k: round(v, 3) for k, v in r["timings"].items()})
    print(summary_table(results), end="")
    return 0 if all(v["passed"] for v in results.values()) else 1


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="screwaction", description="Screw-axis actions: fitting, generation, simulation and fine-tuning.")
    sub = p.add_subparsers(dest="command", required=True)

    def add(name, fn, help_):
        sp = sub.add_parser(name, help=help_)
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--out", default=None, help="output file or directory")
        sp.set_defaults(func=fn)
        return sp

    def scenario_args(sp):
        sp.add_argument("--scenario", choices=sorted(PRESETS), default="bottle")
        sp.add_argument("--config", help="scenario config JSON (overrides --scenario)")

    sp = add("fit-axis", cmd_fit_axis, "fit a screw axis to a two-hand demonstration")
    sp.add_argument("--left", required=True)
    sp.add_argument("--right", required=True)
    sp.add_argument("--meta", required=True, help="JSON with g_l and g_r")
    sp.add_argument("--type", choices=["auto"] + [j.value for j in JointType], default="auto")
    sp.add_argument("--lam", type=float, default=0.1, help="m per rad in the pose distance")

    sp = add("gen-traj", cmd_gen_traj, "turn a screw action into bimanual waypoints")
    sp.add_argument("--action", required=True)
    sp.add_argument("--plan", help="plan JSON (theta_total, k_steps, t_initial)")
    sp.add_argument("--theta", type=float, help="total displacement (rad or m)")
    sp.add_argument("--k", type=int, default=20)
    sp.add_argument("--left-traj", help="left-hand trajectory CSV with k+1 rows")

    sp = add("simulate", cmd_simulate, "execute waypoints against a simulated mechanism")
    sp.add_argument("--waypoints", required=True)
    sp.add_argument("--mechanism", help="mechanism JSON (default: the scenario's)")
    scenario_args(sp)

    for name, fn, help_ in (
        ("cem", cmd_cem, "fine-tune a screw axis by the cross-entropy method"),
        ("cem-baseline", cmd_cem_baseline, "cross-entropy baseline in raw waypoint space"),
    ):
        sp = add(name, fn, help_)
        scenario_args(sp)
        sp.add_argument("--init-axis", help="axis JSON to start from (default: the scenario's perturbed axis)")
        if name == "cem-baseline":
            sp.add_argument("--space", choices=["waypoints"], default="waypoints")
            sp.add_argument("--sigma-pos", type=float, help="m per waypoint coordinate")
            sp.add_argument("--sigma-rot-deg", type=float)

    sp = add("noise-study", cmd_noise_study, "axis error against demonstration noise")
    sp.add_argument("--levels", default="standard", help="'standard' (five levels, 1-3 cm and 2.5-12.5 deg) or 'pos_m,rot_deg;pos_m,rot_deg;...'")
    sp.add_argument("--trials", type=int, default=20)
    sp.add_argument("--axis", help="ground-truth axis JSON (default: bottle)")
    sp.add_argument("--plan", help="ground-truth plan JSON")

    def aug_args(sp):
        sp.add_argument("--n-samples", type=int, default=100)
        sp.add_argument("--translation", type=float, default=0.3, help="m, per axis")
        sp.add_argument("--max-yaw-deg", type=float, default=180.0)
        sp.add_argument("--scale-lo", type=float, default=0.8)
        sp.add_argument("--scale-hi", type=float, default=1.2)

    sp = add("augment", cmd_augment, "grow a dataset from one demonstration")
    sp.add_argument("--cloud", required=True)
    sp.add_argument("--action", required=True)
    aug_args(sp)

    sp = add("predict", cmd_predict, "predict a screw action for a point cloud")
    sp.add_argument("--dataset", required=True)
    sp.add_argument("--cloud", required=True)

    sp = add("extend", cmd_extend, "add a corrected example (and its augmentations) to a dataset")
    sp.add_argument("--dataset", required=True)
    sp.add_argument("--cloud", required=True)
    sp.add_argument("--action", required=True)
    sp.add_argument("--parent", required=True, help="id of the example being corrected")
    aug_args(sp)

    sp = add("reward-ablation", cmd_reward_ablation, "success with and without one ranking signal")
    scenario_args(sp)
    sp.add_argument("--drop", choices=["mean-wrench", "grasp-lost"], required=True)
    sp.add_argument("--seeds", type=int, default=10)

    sp = add("repro", cmd_repro, "run every acceptance experiment and write a report")
    sp.add_argument("--no-determinism-check", action="store_true")
    sp.add_argument("--only", nargs="*", help="criteria to run, by full name or short form such as c3")
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        rc = args.func(args)
    except UsageError as exc:
        parser.error(str(exc))
    except (ValidationError, InvalidArgumentError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (ScrewError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return int(rc or 0)


if __name__ == "__main__":
    sys.exit(main())
