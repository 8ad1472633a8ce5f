"""Velocity and pose fixes from pairs of marker observations.

Between the two observations of a pair the vehicle is assumed to move with
constant speed over ground and constant yaw rate (a circular arc, or a
straight line in the limit). Yaw rates are counter-clockwise positive and
azimuths are measured counter-clockwise from x_LCP, in [0, 2pi).
"""

from __future__ import annotations

import enum
import math
from typing import NamedTuple

from .errors import (
    DegeneratePair,
    FrameMismatch,
    MarkerMismatch,
    NegativeDiscriminant,
    NonMonotonicTime,
    SameMarker,
    SameTimestamp,
)
from .geometry import Frame, azimuth, wrap_angle
from .marker_map import Marker

PI = math.pi
TWO_PI = 2.0 * math.pi
OMEGA_MIN = 1e-6
RADICAND_TOL = 1e-9
EPS_PAIR = 0.1


class Quality(enum.Enum):
    VELOCITY_ONLY = "VelocityOnly"
    FULL_POSE = "FullPose"
    DEAD_RECKONED = "DeadReckoned"


class MarkerObservation(NamedTuple):
    """One identified marker seen in the (level) vehicle frame at time ``t``."""

    t: float
    marker_id: int
    d: float
    theta: float
    x: float
    y: float
    frame: Frame = Frame.LCP

    @classmethod
    def from_xy(cls, t: float, marker_id: int, x: float, y: float) -> "MarkerObservation":
        return cls(t, marker_id, math.hypot(x, y), azimuth(x, y), x, y)


class VehicleStateEstimate(NamedTuple):
    t: float
    x: float
    y: float
    yaw: float
    v: float
    quality: Quality
    # distance between the two per-marker position offsets (pose fixes only)
    disagreement: float = 0.0


class MotionDelta(NamedTuple):
    dx: float
    dy: float
    dyaw: float


def _check_lcp(*obs: MarkerObservation) -> None:
    for o in obs:
        if o.frame is not Frame.LCP:
            raise FrameMismatch(f"observation of marker {o.marker_id} is not in LCP")


def cone_angles(
    obs1: MarkerObservation, obs2: MarkerObservation, dt: float, yaw_rate: float
) -> tuple[float, float]:
    """Interior angles of the triangle (vehicle at t1, vehicle at t2, marker).

    Both angles are taken against the direction of x_LCP at t1 (at the
    second vertex: its reverse), so the vehicle's turn during ``dt`` enters
    only the second angle. The turn is subtracted for a marker on the left
    (theta <= pi) and added for one on the right, mirroring the reflection
    applied to the first angle.
    """
    turn = dt * yaw_rate
    t1 = obs1.theta
    t2 = obs2.theta
    v1 = t1 if t1 <= PI else TWO_PI - t1
    v2 = PI - t2 - turn if t2 <= PI else t2 + turn - PI
    return v1, v2


def estimate_velocity(obs1: MarkerObservation, obs2: MarkerObservation, yaw_rate: float) -> float:
    """Speed over ground from two sightings of the same marker (cosine law)."""
    _check_lcp(obs1, obs2)
    if obs1.marker_id != obs2.marker_id:
        raise MarkerMismatch(
            f"velocity needs one marker, got {obs1.marker_id} and {obs2.marker_id}"
        )
    dt = obs2.t - obs1.t
    if dt == 0.0:
        raise SameTimestamp(f"both observations at t={obs1.t}")
    if dt < 0.0:
        raise NonMonotonicTime(f"observation at t={obs2.t} precedes t={obs1.t}")

    if (obs1.theta <= PI) == (obs2.theta <= PI):
        v1, v2 = cone_angles(obs1, obs2, dt, yaw_rate)
        gamma = PI - v1 - v2
    else:
        # marker crossed the x_LCP axis between sightings: the unsigned cone
        # angles no longer add up, use the signed angle at the marker instead
        gamma = wrap_angle(obs2.theta - obs1.theta + dt * yaw_rate)

    d1, d2 = obs1.d, obs2.d
    radicand = d1 * d1 + d2 * d2 - 2.0 * d1 * d2 * math.cos(gamma)
    if radicand < 0.0:
        if radicand < -RADICAND_TOL:
            raise NegativeDiscriminant(f"cosine-law radicand {radicand:.3e} m^2")
        radicand = 0.0
    return math.sqrt(radicand) / dt


def ctrv_delta(v_og: float, yaw_rate: float, dt: float) -> MotionDelta:
    """Displacement and heading change over ``dt``, expressed in the frame at its start."""
    phi = dt * yaw_rate
    if abs(yaw_rate) < OMEGA_MIN:
        # second-order expansion of the arc; keeps the two branches continuous
        s = v_og * dt
        return MotionDelta(s * (1.0 - phi * phi / 6.0), s * phi / 2.0, phi)
    r = v_og / yaw_rate
    half = math.sin(phi / 2.0)
    # r * (1 - cos(phi)) written without cancellation
    return MotionDelta(r * math.sin(phi), 2.0 * r * half * half, phi)


def estimate_pose(
    obs1: MarkerObservation,
    obs2: MarkerObservation,
    n1: Marker,
    n2: Marker,
    v_og: float,
    yaw_rate: float,
) -> tuple[VehicleStateEstimate, VehicleStateEstimate]:
    """Yaw and LTP position at both observation instants from two distinct markers.

    Pairs are processed in time order, so the argument order only matters for
    simultaneous observations, where it merely flips the baseline direction.
    """
    _check_lcp(obs1, obs2)
    if obs1.marker_id == obs2.marker_id:
        raise SameMarker(f"both observations see marker {obs1.marker_id}")
    if n1.id != obs1.marker_id or n2.id != obs2.marker_id:
        raise MarkerMismatch("library markers do not match the observation ids")
    if obs2.t < obs1.t:
        obs1, obs2, n1, n2 = obs2, obs1, n2, n1
    dt = obs2.t - obs1.t

    if dt > 0.0:
        dx, dy, dyaw = ctrv_delta(v_og, yaw_rate, dt)
    else:
        dx = dy = dyaw = 0.0

    # second sighting re-expressed in the vehicle frame at t1
    c, s = math.cos(dyaw), math.sin(dyaw)
    x2 = c * obs2.x - s * obs2.y + dx
    y2 = s * obs2.x + c * obs2.y + dy
    bx = x2 - obs1.x
    by = y2 - obs1.y
    if math.hypot(bx, by) < EPS_PAIR:
        raise DegeneratePair(
            f"markers {n1.id} and {n2.id} appear {math.hypot(bx, by):.3f} m apart"
        )

    p1 = n1.p_ltp
    p2 = n2.p_ltp
    baseline_lcp = math.atan2(by, bx)
    baseline_ltp = math.atan2(p2.y - p1.y, p2.x - p1.x)
    yaw1 = wrap_angle(baseline_ltp - baseline_lcp)
    yaw2 = wrap_angle(yaw1 + dyaw)

    c, s = math.cos(yaw1), math.sin(yaw1)
    o1x = p1.x - (c * obs1.x - s * obs1.y)
    o1y = p1.y - (s * obs1.x + c * obs1.y)
    o2x = p2.x - (c * x2 - s * y2)
    o2y = p2.y - (s * x2 + c * y2)
    x = (o1x + o2x) / 2.0
    y = (o1y + o2y) / 2.0
    spread = math.hypot(o1x - o2x, o1y - o2y)

    # the displacement is expressed in the t1 vehicle frame; turn it into LTP
    ex = x + c * dx - s * dy
    ey = y + s * dx + c * dy
    return (
        VehicleStateEstimate(obs1.t, x, y, yaw1, v_og, Quality.FULL_POSE, spread),
        VehicleStateEstimate(obs2.t, ex, ey, yaw2, v_og, Quality.FULL_POSE, spread),
    )
