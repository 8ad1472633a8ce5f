"""Accuracy of an estimated trajectory against simulator ground truth."""

from __future__ import annotations

import math
from typing import NamedTuple, Sequence

import numpy as np

from .errors import EmptyEstimates, TimeRangeMismatch
from .estimator import Quality, VehicleStateEstimate
from .simulator import GroundTruth

TIME_TOL = 1e-9


class ErrorStats(NamedTuple):
    quantity: str
    unit: str
    n: int
    mean: float
    std: float
    max: float


class ErrorReport(NamedTuple):
    velocity: ErrorStats
    position: ErrorStats
    yaw: ErrorStats

    def rows(self) -> tuple[ErrorStats, ...]:
        return (self.velocity, self.position, self.yaw)


def _stats(quantity: str, unit: str, err: np.ndarray) -> ErrorStats:
    if err.size == 0:
        return ErrorStats(quantity, unit, 0, math.nan, math.nan, math.nan)
    return ErrorStats(quantity, unit, int(err.size), float(err.mean()), float(err.std()), float(err.max()))


def truth_at(truth: GroundTruth, t: np.ndarray) -> tuple[np.ndarray, ...]:
    """Truth (x, y, yaw, v) at times ``t``.

    Pose comes from the closed-form motion inside each truth interval, since a
    straight chord between samples is off by up to (v*dt)^2 * curvature / 8.
    Speed is linear within an interval, so interpolation is exact for it.
    """
    pose = np.array([truth.pose_at(float(ti)) for ti in t]).reshape(-1, 3)
    return pose[:, 0], pose[:, 1], pose[:, 2], np.interp(t, truth.t, truth.v)


def errors(estimates: Sequence[VehicleStateEstimate], truth: GroundTruth) -> dict[str, np.ndarray]:
    """Absolute error samples: velocity over all fixes, position and yaw over pose fixes."""
    if not estimates:
        raise EmptyEstimates("no estimates to evaluate")
    t = np.array([e.t for e in estimates])
    lo, hi = float(truth.t[0]), float(truth.t[-1])
    bad = (t < lo - TIME_TOL) | (t > hi + TIME_TOL)
    if bad.any():
        raise TimeRangeMismatch(
            f"{int(bad.sum())} estimates outside truth range [{lo:.6f}, {hi:.6f}] s"
        )
    x, y, yaw, v = truth_at(truth, t)
    q = np.array([e.quality for e in estimates])
    fix = q != Quality.DEAD_RECKONED
    pose = q == Quality.FULL_POSE
    ex = np.array([e.x for e in estimates])
    ey = np.array([e.y for e in estimates])
    eyaw = np.array([e.yaw for e in estimates])
    ev = np.array([e.v for e in estimates])
    dyaw = np.remainder(eyaw - yaw + math.pi, 2.0 * math.pi) - math.pi
    return {
        "velocity": np.abs(ev - v)[fix],
        "position": np.hypot(ex - x, ey - y)[pose],
        "yaw": np.degrees(np.abs(dyaw))[pose],
    }


def evaluate(estimates: Sequence[VehicleStateEstimate], truth: GroundTruth) -> ErrorReport:
    err = errors(estimates, truth)
    return ErrorReport(
        _stats("velocity", "m/s", err["velocity"]),
        _stats("position", "m", err["position"]),
        _stats("yaw", "deg", err["yaw"]),
    )


def _f(v: float) -> str:
    return "nan" if math.isnan(v) else f"{v:.6f}"


def to_csv(report: ErrorReport) -> str:
    lines = ["quantity,unit,n,mean,std,max"]
    for r in report.rows():
        lines.append(f"{r.quantity},{r.unit},{r.n},{_f(r.mean)},{_f(r.std)},{_f(r.max)}")
    return "\n".join(lines) + "\n"


def to_table(report: ErrorReport) -> str:
    head = ("quantity", "unit", "n", "mean", "std", "max")
    body = [
        (r.quantity, r.unit, str(r.n), _f(r.mean), _f(r.std), _f(r.max)) for r in report.rows()
    ]
    widths = [max(len(row[i]) for row in (head, *body)) for i in range(len(head))]
    fmt_row = lambda row: "  ".join(  # noqa: E731
        c.ljust(w) if i < 2 else c.rjust(w) for i, (c, w) in enumerate(zip(row, widths))
    )
    return "\n".join([fmt_row(head), "  ".join("-" * w for w in widths), *map(fmt_row, body)]) + "\n"
