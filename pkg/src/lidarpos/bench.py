"""Per-call runtime of the velocity and pose estimators."""

from __future__ import annotations

import math
import time
from typing import NamedTuple

import numpy as np

from .estimator import MarkerObservation, estimate_pose, estimate_velocity
from .geometry import Vec3, rotate2d
from .marker_map import Marker

REFERENCE_MEDIAN_US = 40.77  # published median for the combined estimate, other hardware


class Timing(NamedTuple):
    name: str
    n: int
    median_us: float
    std_us: float
    max_us: float


def _pairs(n: int, seed: int):
    """Consistent observation pairs from random straight drive-bys past two markers."""
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(n):
        v = rng.uniform(1.0, 11.0)
        dt = 0.05
        m1 = Marker(1, Vec3(rng.uniform(-8, 8), rng.uniform(2, 8), 0.5))
        m2 = Marker(2, Vec3(m1.p_ltp.x + rng.uniform(2, 6), -rng.uniform(2, 8), 0.5))
        x0 = rng.uniform(-10, 0)
        yaw = rng.uniform(-0.2, 0.2)

        def seen(t, m):
            px = x0 + v * t * math.cos(yaw)
            py = v * t * math.sin(yaw)
            lx, ly = rotate2d(-yaw, m.p_ltp.x - px, m.p_ltp.y - py)
            return MarkerObservation.from_xy(t, m.id, lx, ly)

        out.append((seen(0.0, m1), seen(dt, m1), seen(dt + 1e-3, m2), m1, m2, v))
    return out


def _summary(name: str, ns: np.ndarray) -> Timing:
    us = ns / 1000.0
    return Timing(name, len(us), float(np.median(us)), float(us.std()), float(us.max()))


def run_bench(iterations: int, seed: int = 0) -> list[Timing]:
    pairs = _pairs(min(iterations, 1000), seed)
    tv = np.empty(iterations, dtype=np.int64)
    tp = np.empty(iterations, dtype=np.int64)
    clock = time.perf_counter_ns
    for i in range(iterations):
        a, b, c, m1, m2, v = pairs[i % len(pairs)]
        t0 = clock()
        estimate_velocity(a, b, 0.0)
        t1 = clock()
        estimate_pose(b, c, m1, m2, v, 0.0)
        t2 = clock()
        tv[i] = t1 - t0
        tp[i] = t2 - t1
    return [_summary("Velocity", tv), _summary("Pose", tp), _summary("Combined", tv + tp)]


def format_report(rows: list[Timing]) -> str:
    lines = [f"{'estimate':<10}{'n':>10}{'median_us':>12}{'std_us':>12}{'max_us':>12}"]
    for r in rows:
        lines.append(f"{r.name:<10}{r.n:>10}{r.median_us:>12.6f}{r.std_us:>12.6f}{r.max_us:>12.6f}")
    lines.append(f"published combined median for comparison: {REFERENCE_MEDIAN_US:.2f} us")
    return "\n".join(lines) + "\n"
