import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from cfieldlab.frame import (PhysicalConstants, RotationFrame, frame_transform_matrix, kappa_dimension,
                             principal_arg, principal_power, principal_sqrt, ray_phase)

angles = st.floats(-math.pi / 2 + 1e-9, math.pi / 2)


@pytest.mark.parametrize("w0, w1, axis, expected", [
    (0.0, 0.0, 0, 1.0),
    (math.pi / 2, 0.0, 0, 1j),
    (0.0, math.pi / 4, 1, (1 + 1j) / math.sqrt(2)),
])
def test_ray_phase_values(w0, w1, axis, expected):
    assert abs(ray_phase(RotationFrame(w0, w1, 1), axis) - expected) < 1e-15


def test_ray_phase_axis_out_of_range():
    with pytest.raises(IndexError):
        ray_phase(RotationFrame(n_dim=2), 3)


@pytest.mark.parametrize("w", [-math.pi / 2, 2.0, -3.0])
def test_frame_rejects_angles_outside_half_open_interval(w):
    with pytest.raises(ValueError):
        RotationFrame(w, 0.0)


def test_to_complex_multiplies_by_phases():
    fr = RotationFrame(0.0, math.pi / 2, 2)
    np.testing.assert_allclose(fr.to_complex([1.0, 2.0, 3.0]), [1.0, 2j, 3j], atol=1e-15)


def test_kappa_three_dimensions_is_einstein_coupling():
    consts = PhysicalConstants(c=3.0, G_newton=0.7)
    assert kappa_dimension(3, consts) == pytest.approx(8 * math.pi * 0.7 / 3.0**4, rel=1e-12)


def test_kappa_four_dimensions_frozen():
    # 3 pi^2 G / c^4 at G = c = 1, evaluated with mpmath
    assert kappa_dimension(4, PhysicalConstants()) == pytest.approx(29.608813203268076, rel=1e-14)


@pytest.mark.parametrize("n", [0, 1, 2, 3.5])
def test_kappa_undefined_below_three(n):
    with pytest.raises(ValueError):
        kappa_dimension(n, PhysicalConstants())


@given(st.integers(3, 9), st.floats(0.5, 5.0))
def test_kappa_positive_and_decreasing_in_c(n, c):
    k1 = kappa_dimension(n, PhysicalConstants(c=c))
    k2 = kappa_dimension(n, PhysicalConstants(c=1.1 * c))
    assert 0 < k2 < k1


def test_constants_validate():
    with pytest.raises(ValueError):
        PhysicalConstants(c=0.0)
    with pytest.raises(ValueError):
        PhysicalConstants(m=-1.0)


@given(st.floats(-3, 3), st.floats(-3, 3), angles)
def test_transform_matrix_has_unit_determinant(re, im, w):
    M = frame_transform_matrix(complex(re, im), w)
    assert abs(np.linalg.det(M) - 1) < 1e-12 * max(1.0, np.max(np.abs(M)) ** 2)


@given(st.floats(-3, 3))
def test_transform_matrix_is_rotation_on_imaginary_space_ray(theta):
    M = frame_transform_matrix(theta, math.pi / 2)
    R = np.array([[math.cos(theta), -math.sin(theta)], [math.sin(theta), math.cos(theta)]])
    np.testing.assert_allclose(M, R, atol=1e-12)


@given(st.floats(-3, 3))
def test_transform_matrix_is_boost_for_imaginary_angle(eta):
    M = frame_transform_matrix(1j * eta, 0.0)
    B = np.array([[math.cosh(eta), -math.sinh(eta)], [-math.sinh(eta), math.cosh(eta)]])
    np.testing.assert_allclose(M, B, rtol=1e-12, atol=1e-12)
    assert np.all(np.abs(M.imag) < 1e-12)


@given(st.floats(-3, 3), st.floats(-3, 3))
def test_transform_preserves_quadratic_form(t, x):
    # the line element on the rays, -(ct)^2 + e^{2iw} (x^1)^2, is invariant
    for w in (0.0, math.pi / 3, math.pi / 2):
        M = frame_transform_matrix(0.4 - 0.3j, w)
        ts, xs = M @ np.array([t, x])
        q = lambda a, b: -a**2 + np.exp(2j * w) * b**2
        assert abs(q(ts, xs) - q(t, x)) < 1e-10 * (1 + t * t + x * x)


@given(angles)
def test_zero_angle_transform_is_identity(w):
    np.testing.assert_allclose(frame_transform_matrix(0.0, w), np.eye(2), atol=1e-15)


def test_principal_branch_conventions():
    assert principal_arg(complex(-1.0, -0.0)) == pytest.approx(math.pi)
    assert abs(principal_sqrt(-4.0) - 2j) < 1e-15
    assert principal_power(0.0, 0.5) == 0
    z = np.array([1j, -1 + 0j, -1j])
    np.testing.assert_allclose(principal_power(z, 0.5), np.exp(0.5j * np.array([math.pi / 2, math.pi, -math.pi / 2])))
