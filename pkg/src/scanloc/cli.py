"""Command-line front end: simulate, register, filter, experiment."""

import argparse
import math
import sys
from pathlib import Path

import numpy as np

from . import harness, sim
from .filters import BodyVelocity, FilterState, predict, update
from .icp import IcpParams, RegistrationError, RegistrationNoiseModel, icp_register
from .pointcloud import estimate_normals, load_cloud
from .pose import Pose
from .so3 import exp_so3


def _fmt(x):
    return repr(float(x))


def _load_config(path, scenario=None):
    base = harness.preset_config(scenario) if scenario else harness.ScenarioConfig()
    if path:
        return harness.parse_config(path, base=base)
    return base


def cmd_simulate(args):
    cfg = _load_config(args.config, args.scenario)
    if args.seed is not None:
        cfg = cfg.with_seed(args.seed)
    log = sim.run_scenario(cfg)
    out = Path(args.out)
    sim.save_sensor_log(log, out)
    harness.write_config(cfg, out / "config.txt")
    print(f"wrote {len(log.odometry)} odometry samples, {len(log.scans)} scans, "
          f"{len(log.truth)} truth poses to {out}")
    return 0


def cmd_register(args):
    source = load_cloud(args.source)
    target = load_cloud(args.target)
    vals = [float(v) for v in args.init.split(",")] if args.init else [0.0] * 6
    if len(vals) != 6:
        raise SystemExit("--init needs 6 comma-separated numbers (rotvec rad, translation m)")
    init = Pose(exp_so3(vals[:3]), np.array(vals[3:]))
    params = IcpParams(
        n_select=args.n_select,
        iterations=args.iterations,
        max_pair_distance=args.max_pair_distance,
        max_normal_angle=math.radians(args.max_normal_angle_deg),
        noise=RegistrationNoiseModel(resolution=args.resolution, n_buckets=args.n_buckets),
        seed=args.seed or 0)
    source = estimate_normals(source, params.normal_neighbors)
    if not target.has_normals():
        target = estimate_normals(target, params.normal_neighbors)
    try:
        result = icp_register(source, target, init, params)
    except RegistrationError as err:
        print(f"error,{type(err).__name__}", file=sys.stderr)
        print(err, file=sys.stderr)
        return 1
    print("x," + ",".join(_fmt(v) for v in result.x))
    for i in range(6):
        print(f"cov{i}," + ",".join(_fmt(v) for v in result.covariance[i]))
    print(f"rank,{result.rank}")
    print(f"condition,{_fmt(result.condition)}")
    return 0


def cmd_filter(args):
    cfg = _load_config(args.config)
    if args.p0_diag:
        cfg.p0_diag = np.array([float(v) for v in args.p0_diag.split(",")])
    if args.q_diag:
        cfg.q_diag = np.array([float(v) for v in args.q_diag.split(",")])
    log = sim.load_sensor_log(args.log)
    kinds = harness.FILTER_KINDS if args.kind == "both" else (args.kind,)
    result = harness.run_experiment(cfg, sensor_log=log, kinds=kinds)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    path = out / "estimates.csv"
    with open(path, "w") as f:
        f.write("t,filter," + ",".join(f"r{i}{j}" for i in range(3) for j in range(3))
                + ",px,py,pz\n")
        for kind in kinds:
            tr = result.tracks[kind]
            for row in range(result.t.size):
                vals = [result.t[row]] + list(tr.R[row].reshape(9)) + list(tr.p[row])
                f.write(_fmt(vals[0]) + f",{kind}," + ",".join(_fmt(v) for v in vals[1:]) + "\n")
    print(f"wrote {path}")
    return 0


def cmd_experiment(args):
    cfg = _load_config(args.config, args.scenario)
    cfg.init_heading_error = math.radians(args.init_heading_error)
    kinds = harness.FILTER_KINDS if args.filters == "both" else (args.filters,)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    base_seed = cfg.seed if args.seed is None else args.seed
    summaries = []
    for i in range(args.seeds):
        run_cfg = cfg.with_seed(base_seed + i)
        result = harness.run_experiment(run_cfg, kinds=kinds)
        run_dir = out / f"seed_{run_cfg.seed}"
        harness.emit_report(result, run_dir)
        for kind in kinds:
            rms = [harness.compute_rms(result, c, kind) for c in ("x", "y", "psi")]
            summaries.append((run_cfg.seed, kind, rms, result.tracks[kind].err[-1]))
        print(f"seed {run_cfg.seed}: " + "; ".join(
            f"{kind} rms=({_fmt(s[2][0])},{_fmt(s[2][1])},{_fmt(s[2][2])})"
            for kind, s in zip(kinds, summaries[-len(kinds):])))
    with open(out / "study.csv", "w") as f:
        f.write("seed,filter,rms_dx,rms_dy,rms_dpsi,final_dx,final_dy,final_dpsi\n")
        for seed, kind, rms, final in summaries:
            f.write(",".join([str(seed), kind] + [_fmt(v) for v in rms]
                             + [_fmt(v) for v in final]) + "\n")
    print(f"wrote {out / 'study.csv'}")
    return 0


def build_parser():
    parser = argparse.ArgumentParser(
        prog="scanloc",
        description="scan-matching-aided localization experiments")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="generate a sensor log directory")
    p.add_argument("--scenario", choices=["straight", "circle", "stationary"])
    p.add_argument("--config", help="flat key = value config file")
    p.add_argument("--seed", type=int)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("register", help="point-to-plane registration of two clouds")
    p.add_argument("--source", required=True, help="XYZ or PLY cloud")
    p.add_argument("--target", required=True, help="XYZ or PLY cloud")
    p.add_argument("--init", help="6 comma-separated numbers: rotation vector (rad) + translation (m)")
    p.add_argument("--iterations", type=int, default=25)
    p.add_argument("--n-select", type=int, default=3000)
    p.add_argument("--max-pair-distance", type=float, default=0.25)
    p.add_argument("--max-normal-angle-deg", type=float, default=45.0)
    p.add_argument("--resolution", type=float, default=0.01,
                   help="depth resolution error scale (m) for the covariance")
    p.add_argument("--n-buckets", type=int, default=3)
    p.add_argument("--seed", type=int)
    p.set_defaults(func=cmd_register)

    p = sub.add_parser("filter", help="run the filters over a stored sensor log")
    p.add_argument("--log", required=True, help="directory written by 'simulate'")
    p.add_argument("--kind", choices=["iekf", "mekf", "both"], default="both")
    p.add_argument("--config")
    p.add_argument("--p0-diag", help="6 comma-separated variances")
    p.add_argument("--q-diag", help="6 comma-separated noise densities")
    p.add_argument("--skip-outlier-gate", action="store_true",
                   help="suppress outlier flagging (flagging never rejects)")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_filter)

    p = sub.add_parser("experiment", help="full scenario comparison over seeds")
    p.add_argument("--scenario", choices=["straight", "circle", "stationary"],
                   required=False, default="straight")
    p.add_argument("--seeds", type=int, default=1)
    p.add_argument("--seed", type=int, help="base seed (overrides config)")
    p.add_argument("--config")
    p.add_argument("--out", required=True)
    p.add_argument("--filters", choices=["iekf", "mekf", "both"], default="both")
    p.add_argument("--init-heading-error", type=float, default=0.0, metavar="DEG")
    p.set_defaults(func=cmd_experiment)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
