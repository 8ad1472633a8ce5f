import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.spatial.transform import Rotation

from lidarpos import geometry as geo
from lidarpos.errors import DegenerateAxis, DegenerateColumns, FrameMismatch

finite = st.floats(-10.0, 10.0, allow_nan=False)
vectors = st.tuples(finite, finite, finite).filter(lambda v: geo.norm(v) > 1e-3)
angles = st.floats(-math.pi, math.pi, allow_nan=False)


def as_np(m):
    return np.array(m).reshape(3, 3)


# oracle: scipy's rotation-vector conversion is an independent Rodrigues implementation
@given(vectors, angles)
def test_axis_angle_matches_rotvec_oracle(axis, angle):
    unit = np.array(axis) / np.linalg.norm(axis)
    expected = Rotation.from_rotvec(unit * angle).as_matrix()
    got = as_np(geo.axis_angle_matrix(axis, angle))
    assert np.allclose(got, expected, atol=1e-12)


@given(vectors, st.floats(0.1, 100.0))
def test_axis_scale_does_not_matter(axis, scale):
    a = geo.axis_angle_matrix(axis, 0.7)
    b = geo.axis_angle_matrix(tuple(scale * c for c in axis), 0.7)
    assert np.allclose(a, b, atol=1e-12)


def test_axis_angle_quarter_turn_about_z():
    m = geo.axis_angle_matrix((0.0, 0.0, 1.0), math.pi / 2)
    assert np.allclose(geo.mat_vec(m, (1.0, 0.0, 0.0)), (0.0, 1.0, 0.0), atol=1e-15)


def test_tiny_angle_is_identity_even_for_zero_axis():
    assert geo.axis_angle_matrix((0.0, 0.0, 0.0), 1e-10) == geo.IDENTITY


def test_zero_axis_with_real_angle_raises():
    with pytest.raises(DegenerateAxis):
        geo.axis_angle_matrix((0.0, 0.0, 1e-13), 0.5)


@given(vectors, vectors)
def test_skew_is_cross_product(w, v):
    assert np.allclose(geo.mat_vec(geo.skew(w), v), np.cross(w, v), atol=1e-12)


@settings(max_examples=200)
@given(vectors, angles, st.lists(finite, min_size=9, max_size=9))
def test_orthonormalize_repairs_perturbed_rotation(axis, angle, noise):
    r = as_np(geo.axis_angle_matrix(axis, angle)) + 1e-3 * np.array(noise).reshape(3, 3)
    m = geo.orthonormalize(tuple(r.ravel()))
    assert geo.orthonormality_error(m) < 1e-14
    assert geo.determinant(m) == pytest.approx(1.0, abs=1e-14)
    # third column keeps its direction
    c3 = np.array(geo.column(m, 2))
    assert np.allclose(c3, r[:, 2] / np.linalg.norm(r[:, 2]), atol=1e-14)


def test_orthonormalize_keeps_exact_rotation():
    r = geo.axis_angle_matrix((1.0, 2.0, 3.0), 1.1)
    assert np.allclose(geo.orthonormalize(r), r, atol=1e-15)


def test_orthonormalize_rejects_parallel_columns():
    with pytest.raises(DegenerateColumns):
        geo.orthonormalize((1.0, 1.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0))


@given(angles, angles)
def test_yaw_matrix_composes(a, b):
    ab = geo.matmul(geo.yaw_matrix(a), geo.yaw_matrix(b))
    assert np.allclose(ab, geo.yaw_matrix(a + b), atol=1e-12)


@given(angles, finite, finite)
def test_rotate2d_round_trip(theta, x, y):
    u, v = geo.rotate2d(theta, x, y)
    assert np.allclose(geo.rotate2d(-theta, u, v), (x, y), atol=1e-12)
    assert math.hypot(u, v) == pytest.approx(math.hypot(x, y), abs=1e-12)


@given(st.floats(-1e4, 1e4, allow_nan=False))
def test_wrap_angle_range_and_equivalence(a):
    w = geo.wrap_angle(a)
    assert -math.pi < w <= math.pi
    assert math.cos(w) == pytest.approx(math.cos(a), abs=1e-9)
    assert math.sin(w) == pytest.approx(math.sin(a), abs=1e-9)


def test_wrap_angle_boundaries():
    assert geo.wrap_angle(math.pi) == math.pi
    assert geo.wrap_angle(-math.pi) == math.pi
    assert geo.wrap_angle(3 * math.pi / 2) == pytest.approx(-math.pi / 2)


@given(finite, finite)
def test_azimuth_range(x, y):
    a = geo.azimuth(x, y)
    assert 0.0 <= a < 2 * math.pi


def test_azimuth_quadrants_and_negative_zero():
    assert geo.azimuth(1.0, 0.0) == 0.0
    assert math.copysign(1.0, geo.azimuth(1.0, -0.0)) == 1.0
    assert geo.azimuth(0.0, 1.0) == pytest.approx(math.pi / 2)
    assert geo.azimuth(0.0, -1.0) == pytest.approx(3 * math.pi / 2)


def test_transpose_products():
    m = geo.axis_angle_matrix((0.3, -1.0, 0.2), 0.8)
    v = (1.0, -2.0, 0.5)
    assert np.allclose(geo.mat_t_vec(m, v), geo.mat_vec(geo.transpose(m), v))
    assert geo.orthonormality_error(m) < 1e-15


def test_require_frame():
    fv = geo.FramedVector(geo.Frame.LCP, geo.Vec3(1.0, 2.0, 3.0), 0.0)
    assert geo.require_frame(fv, geo.Frame.LCP) == (1.0, 2.0, 3.0)
    with pytest.raises(FrameMismatch):
        geo.require_frame(fv, geo.Frame.LTP)
