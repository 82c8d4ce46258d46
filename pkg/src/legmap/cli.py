"""Command-line front end: scenario simulation, end-to-end pipeline runs,
trajectory evaluation, and the mapping throughput benchmark."""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import os
import sys
import time

import numpy as np

from . import __version__
from . import elevmap as em
from . import evalkit as ev
from . import rewards as rw
from .config import (
    build_estimation_options,
    build_mapping_options,
    build_scenario_spec,
    load_config,
)
from .errors import ConfigError
from .runner import run_estimation, run_mapping
from .simkit import run_scenario
from .simkit.scenario import read_tum, write_tum

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_RUNTIME = 3


def _sha256(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(65536), b""):
            h.update(chunk)
    return h.hexdigest()


def _write_manifest(out_dir, cfg, paths, nondeterministic=()) -> str:
    rel = [os.path.relpath(p, out_dir) for p in paths]
    manifest = {
        "tool_version": __version__,
        "seed": cfg["seed"],
        "config": cfg,
        "digests": {r: _sha256(os.path.join(out_dir, r)) for r in sorted(rel)},
        "deterministic_outputs": sorted(set(rel) - set(nondeterministic)),
    }
    path = os.path.join(out_dir, "manifest.json")
    with open(path, "w") as f:
        json.dump(manifest, f, indent=2, sort_keys=True)
    return path


def _load_cfg(args) -> dict:
    overrides = {}
    if getattr(args, "seed", None) is not None:
        overrides["seed"] = args.seed
    return load_config(args.config, overrides)


def cmd_simulate(args) -> int:
    cfg = _load_cfg(args)
    spec = build_scenario_spec(cfg)
    data = run_scenario(spec)
    out = args.out or "simlog"
    paths = data.log.save(out)
    _write_manifest(out, cfg, paths)
    print(f"wrote sensor log with {len(data.log.scans)} scans to {out}")
    return EXIT_OK


def _reward_log(data, out_path) -> None:
    terrain = data.terrain
    tracker = rw.TrappedTracker()
    dt = 1.0 / data.spec.control_rate_hz
    with open(out_path, "w") as f:
        for k, s in enumerate(data.snapshots):
            t = k * dt
            cls = [
                rw.classify_foot_points(s.foot_pos[i], terrain.height) for i in range(4)
            ]
            total, breakdown = rw.reward_total(s, cls)
            cmd_active = bool(
                np.linalg.norm(s.command_vel[:2]) > 1e-6 or abs(s.command_yaw_rate) > 1e-6
            )
            trapped = tracker.update(t, float(np.linalg.norm(s.lin_vel[:2])), cmd_active)
            done, reason = rw.termination_check(s, trapped)
            row = {
                "t": round(t, 6),
                "total": total,
                "terms": breakdown,
                "terminated": done,
                "reason": reason,
            }
            f.write(json.dumps(row, sort_keys=True) + "\n")
            if done:
                logger.warning("termination signaled at t=%.2f: %s", t, reason)


def cmd_run(args) -> int:
    cfg = _load_cfg(args)
    if args.no_kinematics:
        cfg["estimator"]["use_kinematics"] = False
    if args.no_sor:
        cfg["estimator"]["use_sor"] = False
    if args.no_interp:
        cfg["map"]["interpolate"] = False
    if args.align:
        cfg["eval"]["align"] = True
    out = args.out or "runout"
    os.makedirs(out, exist_ok=True)

    spec = build_scenario_spec(cfg)
    data = run_scenario(spec)
    trace = run_estimation(data, build_estimation_options(cfg))
    mapping = run_mapping(data, trace, build_mapping_options(cfg))

    paths = []
    est_traj = ev.Trajectory(trace.t, trace.pos, trace.rot)
    gt_t, gt_rot, gt_pos = data.gt_trajectory()
    gt_traj = ev.Trajectory(gt_t, gt_pos, gt_rot)

    p = os.path.join(out, "est.tum")
    write_tum(p, [(trace.t[k], trace.rot[k], trace.pos[k]) for k in range(len(trace.t))])
    paths.append(p)
    p = os.path.join(out, "gt.tum")
    write_tum(p, [(gt_t[k], gt_rot[k], gt_pos[k]) for k in range(len(gt_t))])
    paths.append(p)

    p = os.path.join(out, "heightmap.csv")
    em.write_height_csv(mapping.height_filled, p)
    paths.append(p)
    p = os.path.join(out, "voxels.csv")
    em.write_voxel_csv(mapping.grid, p)
    paths.append(p)

    p = os.path.join(out, "rewards.jsonl")
    _reward_log(data, p)
    paths.append(p)

    times, zerr, z_mae = ev.z_error_series(est_traj, gt_traj)
    p = os.path.join(out, "z_error.csv")
    with open(p, "w") as f:
        f.write("t,abs_err_m\n")
        for tk, e in zip(times, zerr):
            f.write(f"{tk:.9g},{e:.9g}\n")
    paths.append(p)

    rmse, coverage = ev.map_rmse(mapping.height_filled, data.terrain.height)
    report = ev.MetricsReport(
        ape_rmse_m=ev.ape(est_traj, gt_traj, align=bool(cfg["eval"]["align"])),
        rpe_rmse_m=ev.rpe(est_traj, gt_traj, float(cfg["eval"]["rpe_delta_s"])),
        z_mae_m=z_mae,
        map_rmse_m=rmse,
        map_coverage=coverage,
    )
    p = os.path.join(out, "metrics.json")
    with open(p, "w") as f:
        f.write(report.to_json() + "\n")
    paths.append(p)

    stage_timing = dict(trace.timings)
    stage_timing.update(mapping.timings)
    timing = ev.timing_report(stage_timing)
    p = os.path.join(out, "timing.json")
    with open(p, "w") as f:
        json.dump(timing, f, indent=2, sort_keys=True)
    paths.append(p)

    if cfg["output"]["figures"]:
        from . import report as fig

        p = os.path.join(out, "fig_trajectory.png")
        fig.save_trajectory_figure(est_traj, gt_traj, p)
        paths.append(p)
        p = os.path.join(out, "fig_z_error.png")
        fig.save_z_error_figure(times, zerr, p)
        paths.append(p)
        p = os.path.join(out, "fig_height_map.png")
        fig.save_height_map_figure(mapping.height_filled, p)
        paths.append(p)
        p = os.path.join(out, "fig_timing.png")
        fig.save_timing_figure(timing, p)
        paths.append(p)

    # wall-clock timing can never repeat bit-for-bit; everything else must
    _write_manifest(out, cfg, paths, nondeterministic=("timing.json", "fig_timing.png"))
    print(report.to_json())
    return EXIT_OK


def cmd_evaluate(args) -> int:
    est_poses = read_tum(args.est)
    gt_poses = read_tum(args.gt)
    est_traj = ev.Trajectory.from_poses(est_poses)
    gt_traj = ev.Trajectory.from_poses(gt_poses)
    times, zerr, z_mae = ev.z_error_series(est_traj, gt_traj)
    report = ev.MetricsReport(
        ape_rmse_m=ev.ape(est_traj, gt_traj, align=args.align),
        rpe_rmse_m=ev.rpe(est_traj, gt_traj, args.rpe_delta),
        z_mae_m=z_mae,
    )
    if args.out:
        os.makedirs(args.out, exist_ok=True)
        paths = []
        p = os.path.join(args.out, "metrics.json")
        with open(p, "w") as f:
            f.write(report.to_json() + "\n")
        paths.append(p)
        p = os.path.join(args.out, "z_error.csv")
        with open(p, "w") as f:
            f.write("t,abs_err_m\n")
            for tk, e in zip(times, zerr):
                f.write(f"{tk:.9g},{e:.9g}\n")
        paths.append(p)
        from . import report as fig

        p = os.path.join(args.out, "fig_z_error.png")
        fig.save_z_error_figure(times, zerr, p)
        paths.append(p)
        print(f"wrote evaluation to {args.out}")
    else:
        print(report.to_json())
    return EXIT_OK


def bench_scan(points: int, seed: int = 0) -> tuple[np.ndarray, np.ndarray]:
    """Deterministic dense dome scan of flat ground for the benchmark."""
    rng = np.random.default_rng(seed)
    az = np.arange(points) * (np.pi * (3.0 - np.sqrt(5.0)))
    el = np.deg2rad(rng.uniform(-80.0, -5.0, size=points))
    d = np.column_stack([np.cos(el) * np.cos(az), np.cos(el) * np.sin(az), np.sin(el)])
    origin = np.array([0.0, 0.0, 0.3])
    pts = origin + d * (-origin[2] / d[:, 2])[:, None]
    return pts, origin


def cmd_bench(args) -> int:
    cfg = _load_cfg(args)
    mopts = build_mapping_options(cfg)
    grid = em.VoxelGrid(mopts.window_m, mopts.resolution_m)
    pts, origin = bench_scan(args.points, cfg["seed"])
    center = (
        int(np.floor(origin[0] / grid.res)) - grid.lo[0],
        int(np.floor(origin[1] / grid.res)) - grid.lo[1],
    )
    integrate_t, extract_t = [], []
    for _ in range(args.scans):
        t0 = time.perf_counter()
        em.integrate_scan(grid, pts, origin, mopts.occupancy)
        t1 = time.perf_counter()
        hg = em.extract_heights(grid, mopts.occupancy)
        em.interpolate(hg, center)
        t2 = time.perf_counter()
        integrate_t.append(t1 - t0)
        extract_t.append(t2 - t1)
    total = np.array(integrate_t) + np.array(extract_t)
    timing = ev.timing_report(
        {
            "integrate_scan": integrate_t,
            "extract_interpolate": extract_t,
            "map_update_total": total,
        }
    )
    out = args.out
    if out:
        os.makedirs(out, exist_ok=True)
        with open(os.path.join(out, "timing.json"), "w") as f:
            json.dump(timing, f, indent=2, sort_keys=True)
        from . import report as fig

        fig.save_timing_figure(timing, os.path.join(out, "fig_timing.png"))
    print(json.dumps(timing, indent=2, sort_keys=True))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="legmap",
        description=(
            "Contact-aided LiDAR-inertial odometry and robot-centric "
            "elevation mapping toolkit with a synthetic quadruped simulator"
        ),
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="synthesize a sensor log directory")
    sim.add_argument("--config", help="scenario config YAML")
    sim.add_argument("--seed", type=int, help="override the config seed")
    sim.add_argument("--out", help="output directory (default simlog)")
    sim.set_defaults(func=cmd_simulate)

    run = sub.add_parser("run", help="simulate, estimate, map, and evaluate")
    run.add_argument("--config", help="scenario config YAML")
    run.add_argument("--seed", type=int, help="override the config seed")
    run.add_argument("--out", help="output directory (default runout)")
    run.add_argument("--no-kinematics", action="store_true",
                     help="disable leg-kinematic residuals in the filter")
    run.add_argument("--no-sor", action="store_true",
                     help="disable statistical outlier removal on scans")
    run.add_argument("--no-interp", action="store_true",
                     help="disable height-map ray interpolation")
    run.add_argument("--align", action="store_true",
                     help="rigidly align trajectories before the APE")
    run.set_defaults(func=cmd_run)

    ev_p = sub.add_parser("evaluate", help="trajectory metrics from TUM files")
    ev_p.add_argument("est", help="estimated trajectory (TUM)")
    ev_p.add_argument("gt", help="ground-truth trajectory (TUM)")
    ev_p.add_argument("--align", action="store_true")
    ev_p.add_argument("--rpe-delta", type=float, default=1.0)
    ev_p.add_argument("--out", help="write metrics/series here instead of stdout")
    ev_p.set_defaults(func=cmd_evaluate)

    bench = sub.add_parser("bench", help="mapping throughput benchmark")
    bench.add_argument("--config", help="config YAML (map section is used)")
    bench.add_argument("--seed", type=int)
    bench.add_argument("--scans", type=int, default=100)
    bench.add_argument("--points", type=int, default=20000)
    bench.add_argument("--out", help="write timing.json and figure here")
    bench.set_defaults(func=cmd_bench)
    return parser


def main(argv=None) -> int:
    level = os.environ.get("LEGMAP_LOG", "warning").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING))
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except Exception as e:  # runtime, infeasible scenario, unreadable inputs
        logger.debug("command failed", exc_info=True)
        print(f"error: {e}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
