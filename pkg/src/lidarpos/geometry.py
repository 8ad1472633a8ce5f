"""Frame conventions and small rotation kernels.

Two frames are used throughout:

* ``LTP`` - Earth-fixed East-North-Up frame with an arbitrary surface origin.
* ``LCP`` - vehicle frame, x towards the hood, y towards the driver side,
  z up. An LCP vector is only meaningful together with its time instant.

Matrices are plain row-major 9-tuples and vectors are :class:`Vec3` named
tuples. The pipeline works on a handful of 3x3 products per sample, where
tuple arithmetic is several times faster than numpy dispatch.
"""

from __future__ import annotations

import enum
import math
from typing import NamedTuple, Tuple

from .errors import DegenerateAxis, DegenerateColumns, FrameMismatch

Mat3 = Tuple[float, float, float, float, float, float, float, float, float]

EPS_ANGLE = 1e-9
EPS_AXIS = 1e-12
TWO_PI = 2.0 * math.pi

IDENTITY: Mat3 = (1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0)


class Vec3(NamedTuple):
    x: float
    y: float
    z: float


class Frame(enum.Enum):
    LTP = "LTP"
    LCP = "LCP"


class FramedVector(NamedTuple):
    """A vector tagged with the frame it is expressed in.

    ``t`` is required for LCP vectors, since the vehicle frame moves.
    """

    frame: Frame
    vec: Vec3
    t: float | None = None


def require_frame(v: FramedVector, frame: Frame) -> Vec3:
    if v.frame is not frame:
        raise FrameMismatch(f"expected a {frame.value} vector, got {v.frame.value}")
    return v.vec


def cross(a, b) -> Vec3:
    return Vec3(
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    )


def norm(a) -> float:
    return math.sqrt(a[0] * a[0] + a[1] * a[1] + a[2] * a[2])


def transpose(m: Mat3) -> Mat3:
    return (m[0], m[3], m[6], m[1], m[4], m[7], m[2], m[5], m[8])


def matmul(a: Mat3, b: Mat3) -> Mat3:
    return (
        a[0] * b[0] + a[1] * b[3] + a[2] * b[6],
        a[0] * b[1] + a[1] * b[4] + a[2] * b[7],
        a[0] * b[2] + a[1] * b[5] + a[2] * b[8],
        a[3] * b[0] + a[4] * b[3] + a[5] * b[6],
        a[3] * b[1] + a[4] * b[4] + a[5] * b[7],
        a[3] * b[2] + a[4] * b[5] + a[5] * b[8],
        a[6] * b[0] + a[7] * b[3] + a[8] * b[6],
        a[6] * b[1] + a[7] * b[4] + a[8] * b[7],
        a[6] * b[2] + a[7] * b[5] + a[8] * b[8],
    )


def mat_vec(m: Mat3, v) -> Vec3:
    return Vec3(
        m[0] * v[0] + m[1] * v[1] + m[2] * v[2],
        m[3] * v[0] + m[4] * v[1] + m[5] * v[2],
        m[6] * v[0] + m[7] * v[1] + m[8] * v[2],
    )


def mat_t_vec(m: Mat3, v) -> Vec3:
    """``mᵀ·v`` without building the transpose."""
    return Vec3(
        m[0] * v[0] + m[3] * v[1] + m[6] * v[2],
        m[1] * v[0] + m[4] * v[1] + m[7] * v[2],
        m[2] * v[0] + m[5] * v[1] + m[8] * v[2],
    )


def column(m: Mat3, j: int) -> Vec3:
    return Vec3(m[j], m[3 + j], m[6 + j])


def orthonormality_error(m: Mat3) -> float:
    """max |mᵀm - I| over all entries."""
    g = matmul(transpose(m), m)
    return max(abs(g[k] - IDENTITY[k]) for k in range(9))


def determinant(m: Mat3) -> float:
    return (
        m[0] * (m[4] * m[8] - m[5] * m[7])
        - m[1] * (m[3] * m[8] - m[5] * m[6])
        + m[2] * (m[3] * m[7] - m[4] * m[6])
    )


def skew(w) -> Mat3:
    """Skew-symmetric matrix with ``skew(w) @ v == w x v``."""
    wx, wy, wz = w
    return (0.0, -wz, wy, wz, 0.0, -wx, -wy, wx, 0.0)


def axis_angle_matrix(axis, angle: float) -> Mat3:
    """Rotation by ``angle`` about ``axis`` (right-hand rule).

    The axis need not be unit length: entries carry the squared norm ``r_m``
    and its root explicitly, which is algebraically the same as the usual
    Rodrigues matrix built from the normalized axis.
    """
    if abs(angle) < EPS_ANGLE:
        return IDENTITY
    rx, ry, rz = axis
    rm = rx * rx + ry * ry + rz * rz
    root = math.sqrt(rm)
    if root < EPS_AXIS:
        raise DegenerateAxis(f"rotation axis has norm {root:.3e} for angle {angle:.3e} rad")
    c = math.cos(angle)
    s = math.sin(angle)
    rc = 1.0 - c
    rs = root * s
    return (
        (rx * rx + (ry * ry + rz * rz) * c) / rm,
        (rx * ry * rc - rz * rs) / rm,
        (rx * rz * rc + ry * rs) / rm,
        (rx * ry * rc + rz * rs) / rm,
        (ry * ry + (rx * rx + rz * rz) * c) / rm,
        (ry * rz * rc - rx * rs) / rm,
        (rx * rz * rc - ry * rs) / rm,
        (ry * rz * rc + rx * rs) / rm,
        (rz * rz + (rx * rx + ry * ry) * c) / rm,
    )


def orthonormalize(m: Mat3) -> Mat3:
    """Restore orthonormality keeping the direction of the third column.

    r1 = r2' x r3', r2 = r3' x r1, then every column is normalized.
    """
    _, b1, c1, _, b2, c2, _, b3, c3 = m
    # r1'' = r2' x r3''
    x1 = b2 * c3 - b3 * c2
    y1 = b3 * c1 - b1 * c3
    z1 = b1 * c2 - b2 * c1
    # r2'' = r3'' x r1''
    x2 = c2 * z1 - c3 * y1
    y2 = c3 * x1 - c1 * z1
    z2 = c1 * y1 - c2 * x1
    n1 = math.sqrt(x1 * x1 + y1 * y1 + z1 * z1)
    n2 = math.sqrt(x2 * x2 + y2 * y2 + z2 * z2)
    n3 = math.sqrt(c1 * c1 + c2 * c2 + c3 * c3)
    if n1 < EPS_AXIS or n2 < EPS_AXIS or n3 < EPS_AXIS:
        raise DegenerateColumns("columns are (nearly) parallel; cannot orthonormalize")
    return (
        x1 / n1, x2 / n2, c1 / n3,
        y1 / n1, y2 / n2, c2 / n3,
        z1 / n1, z2 / n2, c3 / n3,
    )  # fmt: skip


def yaw_matrix(theta: float) -> Mat3:
    c = math.cos(theta)
    s = math.sin(theta)
    return (c, -s, 0.0, s, c, 0.0, 0.0, 0.0, 1.0)


def rotate2d(theta: float, x: float, y: float) -> tuple[float, float]:
    """Upper-left 2x2 block of :func:`yaw_matrix` applied to (x, y)."""
    c = math.cos(theta)
    s = math.sin(theta)
    return c * x - s * y, s * x + c * y


def wrap_angle(a: float) -> float:
    """Wrap to (-pi, pi]."""
    w = math.remainder(a, TWO_PI)
    if w <= -math.pi:
        w += TWO_PI
    return w


def azimuth(x: float, y: float) -> float:
    """Counter-clockwise angle from +x in [0, 2pi)."""
    a = math.atan2(y, x)
    if a < 0.0:
        a += TWO_PI
        if a >= TWO_PI:
            a = 0.0
    return a + 0.0  # no negative zero
