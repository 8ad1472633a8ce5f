import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.spatial.transform import Rotation

from lidarpos import geometry as geo
from lidarpos.errors import BadGravity, NonMonotonicTime, NotAtStandstill, StaleSample
from lidarpos.geometry import Vec3
from lidarpos.horizontation import (
    ImuSample,
    OrientationTracker,
    gyro_update,
    init_standstill,
    level,
    project_motion,
    set_yaw,
    tilt_matrix,
)

G = 9.81


def standstill(a=(0.0, 0.0, G), n=101, rate=100.0, w=(0.0, 0.0, 0.0)):
    return [ImuSample(i / rate, Vec3(*a), Vec3(*w)) for i in range(n)]


def same_angle(a, b, tol=1e-9):
    return abs(geo.wrap_angle(a - b)) < tol


def mounted(roll, pitch, v):
    """Level-frame vector seen by a sensor box rolled then pitched."""
    m = Rotation.from_euler("YX", [pitch, roll]).as_matrix()
    return tuple(m.T @ np.array(v))


@given(st.floats(-0.3, 0.3), st.floats(-0.3, 0.3))
def test_tilt_maps_gravity_to_up(roll, pitch):
    a = mounted(roll, pitch, (0.0, 0.0, G))
    up = geo.mat_vec(tilt_matrix(a), a)
    # below the identity cutoff of 1e-9 rad the residual is at most G * 1e-9
    assert np.allclose(up, (0.0, 0.0, G), atol=1e-8)


@given(st.floats(-math.pi, math.pi))
def test_level_init_is_pure_yaw(yaw0):
    tr = init_standstill(standstill(), yaw0)
    assert np.allclose(tr.R, geo.transpose(geo.yaw_matrix(yaw0)), atol=1e-15)
    assert tr.yaw == pytest.approx(geo.wrap_angle(yaw0))
    assert same_angle(tr.heading, yaw0, 1e-12)
    assert tr.t_last == 1.0
    assert tr.gravity == pytest.approx(G)


def test_tilted_init_levels_gravity():
    a = mounted(0.05, -0.08, (0.0, 0.0, G))
    tr = init_standstill(standstill(a), 0.3)
    assert np.allclose(geo.mat_t_vec(tr.R, a), (0.0, 0.0, G), atol=1e-12)
    assert tr.heading == pytest.approx(0.3, abs=1e-12)
    assert geo.orthonormality_error(tr.R) < 1e-15


def test_short_window_is_rejected():
    with pytest.raises(NotAtStandstill):
        init_standstill(standstill(n=50), 0.0)


def test_rotation_is_rejected():
    with pytest.raises(NotAtStandstill):
        init_standstill(standstill(w=(0.0, 0.0, 0.02)), 0.0)


def test_shaking_is_rejected():
    samples = standstill()
    samples[10] = samples[10]._replace(a=Vec3(3.0, 0.0, G))
    with pytest.raises(NotAtStandstill):
        init_standstill(samples, 0.0)


def test_gyro_noise_at_standstill_is_accepted():
    rng = np.random.default_rng(1)
    samples = [
        ImuSample(i / 100, Vec3(*(np.array([0, 0, G]) + 0.02 * rng.standard_normal(3))),
                  Vec3(*(0.002 * rng.standard_normal(3))))
        for i in range(101)
    ]  # fmt: skip
    init_standstill(samples, 0.0)


def test_implausible_gravity():
    with pytest.raises(BadGravity):
        init_standstill(standstill(a=(0.0, 0.0, 5.0)), 0.0)


def test_gyro_update_constant_yaw_rate():
    # closed-form oracle: rotating at w for t gives R = yaw_matrix(w t)ᵀ
    tr = init_standstill(standstill(), 0.0)
    w = 0.5
    t0 = tr.t_last
    for k in range(1, 201):
        tr = gyro_update(tr, ImuSample(t0 + k / 100, Vec3(0, 0, G), Vec3(0.0, 0.0, w)))
    assert tr.yaw == pytest.approx(w * 2.0, abs=1e-12)
    err = np.linalg.norm(as_np(tr.R) - as_np(geo.transpose(geo.yaw_matrix(w * 2.0))))
    assert err < 1e-3  # first-order update at 100 Hz
    assert tr.heading == pytest.approx(1.0, abs=1e-3)


def as_np(m):
    return np.array(m).reshape(3, 3)


def test_gyro_update_time_checks():
    tr = init_standstill(standstill(), 0.0)
    with pytest.raises(NonMonotonicTime):
        gyro_update(tr, ImuSample(tr.t_last, Vec3(0, 0, G), Vec3(0, 0, 0)))
    with pytest.raises(StaleSample):
        gyro_update(tr, ImuSample(tr.t_last + 0.5, Vec3(0, 0, G), Vec3(0, 0, 0)))


@given(st.floats(-math.pi, math.pi), st.floats(-3, 3), st.floats(-3, 3), st.floats(-1, 1))
def test_project_motion_level_vehicle(yaw, a_long, a_lat, wz):
    tr = init_standstill(standstill(), yaw)
    hm = project_motion(tr, ImuSample(1.01, Vec3(a_long, a_lat, G), Vec3(0.0, 0.0, wz)))
    assert hm.a_long == pytest.approx(a_long, abs=1e-9)
    assert hm.a_lat == pytest.approx(a_lat, abs=1e-9)
    assert hm.yaw_rate_ltp == pytest.approx(wz, abs=1e-12)
    assert hm.a_up == pytest.approx(0.0, abs=1e-12)
    assert hm.a_og == pytest.approx(math.hypot(a_long, a_lat), abs=1e-12)


def test_project_motion_roll_rate():
    tr = init_standstill(standstill(), 0.0)
    hm = project_motion(tr, ImuSample(1.01, Vec3(0, 0, G), Vec3(0.1, 0.0, 0.0)))
    assert hm.roll_rate == pytest.approx(0.1)
    assert hm.pitch_rate == pytest.approx(0.0, abs=1e-15)


def test_project_motion_tilted_mount_keeps_magnitudes():
    roll, pitch = 0.04, -0.06
    tr = init_standstill(standstill(mounted(roll, pitch, (0, 0, G))), 0.0)
    hm = project_motion(tr, ImuSample(1.01, Vec3(*mounted(roll, pitch, (1.5, 0.0, G))), Vec3(0, 0, 0)))
    assert hm.a_up == pytest.approx(0.0, abs=1e-12)
    assert hm.a_og == pytest.approx(1.5, abs=1e-12)
    assert hm.a_long == pytest.approx(1.5, abs=1e-12)


@given(st.floats(-math.pi, math.pi), st.floats(-math.pi, math.pi))
def test_set_yaw(yaw0, yaw1):
    tr = init_standstill(standstill(mounted(0.03, 0.02, (0, 0, G))), yaw0)
    out = set_yaw(tr, yaw1)
    assert same_angle(out.heading, yaw1)
    assert out.yaw == pytest.approx(geo.wrap_angle(yaw1))
    # the LTP vertical seen in the vehicle frame is untouched
    assert np.allclose(out.z_ltp, tr.z_ltp, atol=1e-12)
    assert geo.orthonormality_error(out.R) < 1e-14


@given(st.floats(-math.pi, math.pi), st.floats(-20, 20), st.floats(-20, 20))
def test_level_is_identity_for_level_vehicle(yaw, x, y):
    tr = init_standstill(standstill(), yaw)
    assert np.allclose(level(tr, (x, y, 0.5)), (x, y, 0.5), atol=1e-9)


def test_level_undoes_mount_tilt():
    roll, pitch = 0.05, 0.04
    tr = init_standstill(standstill(mounted(roll, pitch, (0, 0, G))), 0.0)
    p = level(tr, mounted(roll, pitch, (8.0, 3.0, 0.5)))
    assert p[2] == pytest.approx(0.5, abs=1e-12)
    assert math.hypot(p[0], p[1]) == pytest.approx(math.hypot(8.0, 3.0), abs=1e-12)
    assert np.allclose(p, (8.0, 3.0, 0.5), atol=1e-12)


def test_tracker_properties():
    tr = OrientationTracker(geo.IDENTITY, 0.0, 0.0, G)
    assert tr.x_ltp == (1, 0, 0) and tr.y_ltp == (0, 1, 0) and tr.z_ltp == (0, 0, 1)
