"""Tracking the LTP axes in the vehicle frame from IMU data.

The tracker holds ``R``, the matrix whose columns are the LTP axes expressed
in LCP coordinates, so ``R @ v_ltp`` gives LCP coordinates and ``Rᵀ @ v_lcp``
gives LTP coordinates.
"""

from __future__ import annotations

import math
import statistics
from typing import NamedTuple, Sequence

from . import geometry as geo
from .errors import BadGravity, NonMonotonicTime, NotAtStandstill, StaleSample
from .geometry import Mat3, Vec3

T_INIT = 1.0
STANDSTILL_MAX_RATE = 0.005
STANDSTILL_MAX_ACCEL_STD = 0.05
STANDSTILL_MAX_RATE_STD = 0.05
GRAVITY_RANGE = (9.5, 10.1)
DT_MAX = 0.1


class ImuSample(NamedTuple):
    t: float
    a: Vec3  # m/s^2, specific force in LCP (gravity included)
    w: Vec3  # rad/s in LCP


class OrientationTracker(NamedTuple):
    R: Mat3
    t_last: float
    yaw: float
    gravity: float

    @property
    def x_ltp(self) -> Vec3:
        return geo.column(self.R, 0)

    @property
    def y_ltp(self) -> Vec3:
        return geo.column(self.R, 1)

    @property
    def z_ltp(self) -> Vec3:
        return geo.column(self.R, 2)

    @property
    def heading(self) -> float:
        """Yaw implied by ``R`` itself (projection of x_LCP onto the LTP plane)."""
        return math.atan2(self.R[1], self.R[0])


class HorizontalMotion(NamedTuple):
    a_long: float
    a_lat: float
    roll_rate: float
    pitch_rate: float
    yaw_rate_ltp: float
    a_up: float
    a_og: float
    rate_og: float


def tilt_matrix(a_mean) -> Mat3:
    """Rotation taking the measured gravity direction onto +z."""
    ax, ay, az = a_mean
    g = geo.norm(a_mean)
    axis = geo.cross(a_mean, (0.0, 0.0, 1.0))
    # same angle as arccos(az / g), without its loss of precision near zero tilt
    angle = math.atan2(math.hypot(ax, ay), az)
    if g == 0.0:
        raise BadGravity("zero acceleration during standstill")
    return geo.axis_angle_matrix(axis, angle)


def init_standstill(samples: Sequence[ImuSample], yaw0: float) -> OrientationTracker:
    """Initialize the tracker from a standstill window and a known yaw.

    Raises ``NotAtStandstill`` when the window is shorter than ``T_INIT`` or
    the sensors show motion, ``BadGravity`` when the averaged specific force
    is implausible as gravity.
    """
    if len(samples) < 2:
        raise NotAtStandstill("need at least two IMU samples to initialize")
    span = samples[-1].t - samples[0].t
    if span < T_INIT - 1e-9:
        raise NotAtStandstill(f"standstill window spans {span:.3f} s, need {T_INIT:.3f} s")

    axes = list(zip(*(s.a for s in samples)))
    rates = list(zip(*(s.w for s in samples)))
    a_mean = Vec3(*(math.fsum(c) / len(c) for c in axes))
    w_mean = Vec3(*(math.fsum(c) / len(c) for c in rates))
    a_std = max(statistics.pstdev(c) for c in axes)
    w_std = max(statistics.pstdev(c) for c in rates)
    if geo.norm(w_mean) >= STANDSTILL_MAX_RATE or w_std >= STANDSTILL_MAX_RATE_STD:
        raise NotAtStandstill(
            f"rotation rate mean {geo.norm(w_mean):.4f} rad/s, std {w_std:.4f} rad/s"
        )
    if a_std >= STANDSTILL_MAX_ACCEL_STD:
        raise NotAtStandstill(f"acceleration std {a_std:.4f} m/s^2 over the window")

    g = geo.norm(a_mean)
    if not GRAVITY_RANGE[0] <= g <= GRAVITY_RANGE[1]:
        raise BadGravity(f"G = {g:.4f} m/s^2 outside {GRAVITY_RANGE}")

    tilt = tilt_matrix(a_mean)
    R = geo.transpose(geo.matmul(geo.yaw_matrix(yaw0), tilt))
    tracker = OrientationTracker(R=R, t_last=samples[-1].t, yaw=geo.wrap_angle(yaw0), gravity=g)
    # the minimal tilt rotation twists a tilted x_LCP slightly; turn it back onto yaw0
    return set_yaw(tracker, yaw0)


def gyro_update(tracker: OrientationTracker, sample: ImuSample) -> OrientationTracker:
    """First-order propagation of ``R`` with one gyro sample, then re-orthonormalization."""
    dt = sample.t - tracker.t_last
    if dt <= 0.0:
        raise NonMonotonicTime(f"sample at t={sample.t} not after t={tracker.t_last}")
    if dt > DT_MAX:
        raise StaleSample(f"gap of {dt:.3f} s exceeds {DT_MAX} s; re-initialize the tracker")
    wx, wy, wz = sample.w
    # (I + dt * S(w)ᵀ) @ R
    p, q, s = dt * wz, -dt * wy, dt * wx
    r0, r1, r2, r3, r4, r5, r6, r7, r8 = tracker.R
    R = geo.orthonormalize(
        (
            r0 + p * r3 + q * r6,
            r1 + p * r4 + q * r7,
            r2 + p * r5 + q * r8,
            r3 - p * r0 + s * r6,
            r4 - p * r1 + s * r7,
            r5 - p * r2 + s * r8,
            r6 - q * r0 - s * r3,
            r7 - q * r1 - s * r4,
            r8 - q * r2 - s * r5,
        )
    )
    yaw_rate = R[2] * wx + R[5] * wy + R[8] * wz
    return OrientationTracker(
        R=R,
        t_last=sample.t,
        yaw=geo.wrap_angle(tracker.yaw + dt * yaw_rate),
        gravity=tracker.gravity,
    )


def project_motion(tracker: OrientationTracker, sample: ImuSample) -> HorizontalMotion:
    """Express the sample's acceleration and rotation rate over the LTP plane.

    Gravity is removed from the vertical LTP component. The horizontal parts
    are then split along the tracker yaw into longitudinal/lateral
    acceleration and roll/pitch rate.
    """
    R = tracker.R
    ax, ay, az = geo.mat_t_vec(R, sample.a)
    rx, ry, rz = geo.mat_t_vec(R, sample.w)

    a_og = math.hypot(ax, ay)
    heading_a = math.atan2(ay, ax) if a_og > 0.0 else 0.0
    d_a = geo.wrap_angle(heading_a - tracker.yaw)

    rate_og = math.hypot(rx, ry)
    heading_rate = math.atan2(ry, rx) if rate_og > 0.0 else 0.0
    d_rate = geo.wrap_angle(heading_rate - tracker.yaw)

    return HorizontalMotion(
        a_long=a_og * math.cos(d_a),
        a_lat=a_og * math.sin(d_a),
        roll_rate=rate_og * math.cos(d_rate),
        pitch_rate=rate_og * math.sin(d_rate),
        yaw_rate_ltp=rz,
        a_up=az - tracker.gravity,
        a_og=a_og,
        rate_og=rate_og,
    )


def set_yaw(tracker: OrientationTracker, yaw: float) -> OrientationTracker:
    """Overwrite the yaw with an external fix, turning ``R`` about LTP z to match."""
    delta = yaw - tracker.heading
    R = geo.orthonormalize(geo.matmul(tracker.R, geo.yaw_matrix(-delta)))
    return tracker._replace(R=R, yaw=geo.wrap_angle(yaw))


def level(tracker: OrientationTracker, v) -> Vec3:
    """Express an LCP vector in the level frame sharing the vehicle heading.

    For a vehicle already parallel to the LTP plane this is the identity.
    """
    x, y, z = geo.mat_t_vec(tracker.R, v)
    lx, ly = geo.rotate2d(-tracker.heading, x, y)
    return Vec3(lx, ly, z)
