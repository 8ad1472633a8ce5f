"""Command line front end: ``lidarpos {simulate,estimate,evaluate,bench}``.

Exit codes: 0 success, 1 runtime or estimation error, 2 usage or config error.
"""

from __future__ import annotations

import argparse
import dataclasses
import logging
import math
import os
import sys
import time

from . import bench, evaluation, logs
from .errors import InvalidConfig, LocalizationError
from .marker_map import load_library, write_library
from .pipeline import RunConfig, load_run_config, run_pipeline, write_run_config
from .simulator import load_scenario, simulate

log = logging.getLogger("lidarpos")

EXIT_OK, EXIT_RUNTIME, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


def _outdir(path: str) -> str:
    os.makedirs(path, exist_ok=True)
    if not os.access(path, os.W_OK):
        raise UsageError(f"output directory {path!r} is not writable")
    return path


def cmd_simulate(args) -> int:
    try:
        cfg = load_scenario(args.config)
    except FileNotFoundError as exc:
        raise UsageError(str(exc)) from None
    if args.seed is not None:
        cfg = dataclasses.replace(cfg, seed=args.seed)
    out = _outdir(args.out)
    sim = simulate(cfg)
    write_library(os.path.join(out, "markers.csv"), sim.markers)
    logs.write_imu(os.path.join(out, "imu.csv"), sim.imu)
    logs.write_lidar(os.path.join(out, "lidar.csv"), sim.lidar)
    logs.write_truth(os.path.join(out, "truth.csv"), sim.truth)
    write_run_config(
        os.path.join(out, "run.cfg"),
        RunConfig(
            markers="markers.csv", imu="imu.csv", lidar="lidar.csv",
            x0=cfg.x0, y0=cfg.y0, yaw0=cfg.yaw0,
        ),
    )  # fmt: skip
    print(
        f"simulated {cfg.name}: {cfg.duration:.2f} s, {len(sim.imu)} IMU samples, "
        f"{len(sim.lidar)} LiDAR returns, {len(sim.markers)} markers -> {out}"
    )
    return EXIT_OK


def _require_file(path: str, what: str) -> None:
    if not os.path.isfile(path):
        raise UsageError(f"{what} {path!r} does not exist")


def cmd_estimate(args) -> int:
    _require_file(args.config, "run config")
    run = load_run_config(args.config)
    if args.yaw0 is not None:
        run = dataclasses.replace(run, yaw0=math.radians(args.yaw0))
    overrides = {}
    if args.reflectivity_threshold is not None:
        overrides["reflectivity_threshold"] = args.reflectivity_threshold
    if args.cluster_ms is not None:
        overrides["cluster_time"] = args.cluster_ms / 1000.0
    if overrides:
        try:
            run = run.with_pipeline(**overrides)
        except ValueError as exc:
            raise InvalidConfig(next(iter(overrides)), str(exc)) from None
    for path, what in ((run.markers, "marker library"), (run.imu, "IMU log"), (run.lidar, "LiDAR log")):
        _require_file(path, what)
    out = _outdir(args.out or os.path.dirname(os.path.abspath(args.config)))

    library = load_library(run.markers, d_c_max=run.pipeline.d_c_max)
    result = run_pipeline(logs.read_imu(run.imu), logs.read_lidar(run.lidar), library, run)
    path = os.path.join(out, "trajectory.csv")
    logs.write_trajectory(path, result.estimates)
    c = result.counts
    print(
        f"estimated {len(result.estimates)} rows ({c['pose_fixes']} pose fixes, "
        f"{c['velocity_fixes']} velocity fixes, {c['clusters']} clusters) -> {path}"
    )
    return EXIT_OK


def cmd_evaluate(args) -> int:
    _require_file(args.estimates, "estimates file")
    _require_file(args.truth, "truth file")
    report = evaluation.evaluate(logs.read_trajectory(args.estimates), logs.read_truth(args.truth))
    out = _outdir(args.out or os.path.dirname(os.path.abspath(args.estimates)))
    with open(os.path.join(out, "report.csv"), "w", encoding="utf-8", newline="\n") as fh:
        fh.write(evaluation.to_csv(report))
    table = evaluation.to_table(report)
    with open(os.path.join(out, "report.txt"), "w", encoding="utf-8", newline="\n") as fh:
        fh.write(table)
    sys.stdout.write(table)
    return EXIT_OK


def cmd_bench(args) -> int:
    if args.iterations < 1000:
        raise UsageError("--iterations must be at least 1000")
    t0 = time.perf_counter()
    rows = bench.run_bench(args.iterations, seed=args.seed or 0)
    text = bench.format_report(rows)
    sys.stdout.write(text)
    print(f"wall time {time.perf_counter() - t0:.3f} s")
    if args.out:
        with open(os.path.join(_outdir(args.out), "bench.txt"), "w", encoding="utf-8") as fh:
            fh.write(text)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="lidarpos", description="LiDAR marker positioning toolkit")
    p.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("simulate", help="simulate a scenario and write its logs")
    s.add_argument("--config", required=True, help="scenario file or bundled scenario name")
    s.add_argument("--out", required=True, help="output directory")
    s.add_argument("--seed", type=int, help="override the scenario seed")
    s.set_defaults(func=cmd_simulate)

    e = sub.add_parser("estimate", help="run the estimator over logs")
    e.add_argument("--config", required=True, help="run config (key = value)")
    e.add_argument("--out", help="output directory (default: next to the run config)")
    e.add_argument("--yaw0", type=float, help="initial yaw, degrees")
    e.add_argument("--reflectivity-threshold", type=int)
    e.add_argument("--cluster-ms", type=float, help="clustering time threshold, ms")
    e.set_defaults(func=cmd_estimate)

    v = sub.add_parser("evaluate", help="compare a trajectory with ground truth")
    v.add_argument("--estimates", required=True, help="trajectory CSV")
    v.add_argument("--truth", required=True, help="truth CSV")
    v.add_argument("--out", help="output directory (default: next to the estimates)")
    v.set_defaults(func=cmd_evaluate)

    b = sub.add_parser("bench", help="time the velocity and pose estimators")
    b.add_argument("--iterations", type=int, default=141600)
    b.add_argument("--seed", type=int)
    b.add_argument("--out", help="also write bench.txt here")
    b.set_defaults(func=cmd_bench)
    return p


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.WARNING,
        format="%(levelname)s: %(message)s",
    )
    try:
        return args.func(args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except InvalidConfig as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (LocalizationError, OSError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
