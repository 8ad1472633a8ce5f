"""CSV log formats (version 1).

All files are UTF-8, comma separated, LF line endings, ``.`` decimal
separator, one header row. Numbers are written with 6 decimals.

============  ==========================================
file          header
============  ==========================================
IMU log       ``t,ax,ay,az,wx,wy,wz``
LiDAR log     ``t,x,y,z,reflectivity``
markers       ``id,x,y,z``
trajectory    ``t,x,y,yaw,v,quality``
truth         ``t,x,y,yaw,v,yaw_rate,ax,ay``
============  ==========================================
"""

from __future__ import annotations

import csv
import math
import os
from typing import Callable, Iterable, Sequence, TypeVar

import numpy as np

from .errors import ParseError
from .estimator import Quality, VehicleStateEstimate
from .geometry import Vec3, wrap_angle
from .horizontation import ImuSample
from .pointcloud import LidarReturn
from .simulator import GroundTruth

IMU_HEADER = ("t", "ax", "ay", "az", "wx", "wy", "wz")
LIDAR_HEADER = ("t", "x", "y", "z", "reflectivity")
TRAJECTORY_HEADER = ("t", "x", "y", "yaw", "v", "quality")
TRUTH_HEADER = ("t", "x", "y", "yaw", "v", "yaw_rate", "ax", "ay")

T = TypeVar("T")


def fmt(v: float) -> str:
    s = f"{v:.6f}"
    return "0.000000" if s == "-0.000000" else s


def _write(path, header: Sequence[str], rows: Iterable[Sequence[str]]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def _read(path, header: Sequence[str], convert: Callable[[list[str]], T]) -> list[T]:
    path = os.fspath(path)
    out: list[T] = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        first = next(reader, None)
        if first is None or tuple(h.strip() for h in first) != tuple(header):
            raise ParseError(f"expected header {','.join(header)}", path=path, line=1)
        for row in reader:
            if not row:
                continue
            if len(row) != len(header):
                raise ParseError(
                    f"expected {len(header)} fields, got {len(row)}", path=path, line=reader.line_num
                )
            try:
                out.append(convert(row))
            except ValueError as exc:
                raise ParseError(str(exc), path=path, line=reader.line_num) from None
    return out


def _finite(values: list[float]) -> list[float]:
    if not all(math.isfinite(v) for v in values):
        raise ValueError("non-finite value")
    return values


def write_imu(path, samples: Iterable[ImuSample]) -> None:
    _write(path, IMU_HEADER, ([fmt(s.t), *map(fmt, s.a), *map(fmt, s.w)] for s in samples))


def read_imu(path) -> list[ImuSample]:
    def conv(row):
        v = _finite([float(x) for x in row])
        return ImuSample(v[0], Vec3(v[1], v[2], v[3]), Vec3(v[4], v[5], v[6]))

    return _read(path, IMU_HEADER, conv)


def write_lidar(path, returns: Iterable[LidarReturn]) -> None:
    _write(path, LIDAR_HEADER, ([fmt(r.t), *map(fmt, r.p), str(r.reflectivity)] for r in returns))


def read_lidar(path) -> list[LidarReturn]:
    def conv(row):
        v = _finite([float(x) for x in row[:4]])
        refl = int(row[4])
        if not 0 <= refl <= 255:
            raise ValueError(f"reflectivity {refl} outside [0, 255]")
        return LidarReturn(v[0], Vec3(v[1], v[2], v[3]), refl)

    return _read(path, LIDAR_HEADER, conv)


def write_trajectory(path, estimates: Iterable[VehicleStateEstimate]) -> None:
    _write(
        path,
        TRAJECTORY_HEADER,
        (
            [fmt(e.t), fmt(e.x), fmt(e.y), fmt(wrap_angle(e.yaw)), fmt(e.v), e.quality.value]
            for e in estimates
        ),
    )


def read_trajectory(path) -> list[VehicleStateEstimate]:
    def conv(row):
        v = _finite([float(x) for x in row[:5]])
        return VehicleStateEstimate(v[0], v[1], v[2], v[3], v[4], Quality(row[5].strip()))

    return _read(path, TRAJECTORY_HEADER, conv)


def write_truth(path, truth: GroundTruth) -> None:
    rows = zip(truth.t, truth.x, truth.y, truth.yaw, truth.v, truth.yaw_rate, truth.ax, truth.ay)
    _write(
        path,
        TRUTH_HEADER,
        ([fmt(t), fmt(x), fmt(y), fmt(wrap_angle(yaw)), fmt(v), fmt(w), fmt(ax), fmt(ay)]
         for t, x, y, yaw, v, w, ax, ay in rows),
    )  # fmt: skip


def read_truth(path) -> GroundTruth:
    rows = _read(path, TRUTH_HEADER, lambda row: _finite([float(x) for x in row]))
    if not rows:
        raise ParseError("truth file has no rows", path=os.fspath(path))
    a = np.array(rows)
    return GroundTruth(
        t=a[:, 0], x=a[:, 1], y=a[:, 2], yaw=np.unwrap(a[:, 3]), v=a[:, 4],
        yaw_rate=a[:, 5], ax=a[:, 6], ay=a[:, 7],
        accel=np.r_[0.0, np.diff(a[:, 4]) / np.maximum(np.diff(a[:, 0]), 1e-12)],
    )  # fmt: skip
