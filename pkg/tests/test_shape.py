import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from droplet.errors import ShapeError
from droplet.shape import (
    ShapeFunction, angle_map, area, boundary_frame, coeff_vector, derivative, from_coeff_vector,
    inner, interpolate, mode_index, mode_labels, nodes, recenter, to_coeffs, to_samples,
    translated_circle,
)


def direct_dft(x):
    """O(N^2) real Fourier coefficients, independent of numpy.fft."""
    n = x.size
    th = 2 * np.pi * np.arange(n) / n
    k = np.arange(n // 2 + 1)
    C = np.cos(np.outer(k, th))
    S = np.sin(np.outer(k, th))
    a = 2.0 / n * C @ x
    b = 2.0 / n * S @ x
    a[0] /= 2
    a[-1] /= 2
    b[0] = b[-1] = 0.0
    return a, b


def test_nodes_are_uniform():
    th = nodes(16)
    assert th[0] == 0.0
    np.testing.assert_allclose(np.diff(th), 2 * np.pi / 16)


@pytest.mark.parametrize("n", [7, 8, 0])
def test_grid_size_validation(n):
    with pytest.raises(ShapeError):
        nodes(n)


def test_coefficients_match_direct_dft(rng):
    x = rng.normal(size=64)
    a, b = to_coeffs(x)
    a0, b0 = direct_dft(x)
    np.testing.assert_allclose(a, a0, atol=1e-13)
    np.testing.assert_allclose(b, b0, atol=1e-13)


def test_single_modes_have_unit_coefficient():
    th = nodes(32)
    a, b = to_coeffs(0.3 + np.cos(3 * th) - 2 * np.sin(5 * th) + 0.5 * np.cos(16 * th))
    expect_a = np.zeros(17)
    expect_b = np.zeros(17)
    expect_a[[0, 3, 16]] = [0.3, 1.0, 0.5]
    expect_b[5] = -2.0
    np.testing.assert_allclose(a, expect_a, atol=1e-14)
    np.testing.assert_allclose(b, expect_b, atol=1e-14)


@given(st.lists(st.floats(-1, 1), min_size=32, max_size=32))
def test_sample_coefficient_round_trip(values):
    x = np.array(values)
    np.testing.assert_allclose(to_samples(*to_coeffs(x)), x, atol=1e-13)


@given(st.lists(st.floats(-1, 1), min_size=16, max_size=16))
def test_coefficient_vector_round_trip(values):
    vec = np.array(values)
    a, b = from_coeff_vector(vec)
    assert b[-1] == 0.0
    np.testing.assert_array_equal(coeff_vector(a, b), vec)


def test_mode_index_and_labels_agree():
    labels = mode_labels(16)
    assert len(labels) == 16
    assert labels[mode_index(0)] == "1"
    assert labels[mode_index(3, "cos")] == "cos3"
    assert labels[mode_index(3, "sin")] == "sin3"
    assert labels[-1] == "cos8"


def test_upsampling_preserves_band_limited_function():
    th32 = nodes(32)
    f = lambda t: np.cos(2 * t) + 0.2 * np.sin(7 * t) + 0.1  # noqa: E731
    fine = to_samples(*to_coeffs(f(th32)), 128)
    np.testing.assert_allclose(fine, f(nodes(128)), atol=1e-14)


def test_interpolation_at_off_grid_angles():
    s = ShapeFunction.from_modes(1.0, 32, cos={2: 0.05}, sin={5: 0.02})
    t = np.linspace(0.1, 6.0, 17)
    np.testing.assert_allclose(s.evaluate(t), 0.05 * np.cos(2 * t) + 0.02 * np.sin(5 * t), atol=1e-15)
    np.testing.assert_allclose(interpolate(s.samples, t), s.evaluate(t), atol=1e-15)


@given(st.integers(1, 15), st.floats(-0.1, 0.1), st.booleans())
def test_spectral_derivative_of_single_modes(k, amp, use_sin):
    s = ShapeFunction.from_modes(1.0, 32, **({"sin": {k: amp}} if use_sin else {"cos": {k: amp}}))
    th = s.theta
    expect = amp * k * (np.cos(k * th) if use_sin else -np.sin(k * th))
    np.testing.assert_allclose(derivative(s), expect, atol=1e-12)


def test_shape_validation():
    with pytest.raises(ShapeError):
        ShapeFunction(1.0, np.full(16, -1.0))
    with pytest.raises(ShapeError):
        ShapeFunction(1.0, np.r_[np.nan, np.zeros(15)])
    with pytest.raises(ShapeError):
        ShapeFunction(0.0, np.zeros(16))
    with pytest.raises(ShapeError):
        ShapeFunction(1.0, np.zeros(15))


def test_shape_is_immutable():
    s = ShapeFunction.zero(1.0, 16)
    with pytest.raises(ValueError):
        s.samples[0] = 1.0


def test_area_of_circles_and_ellipse():
    assert area(ShapeFunction.zero(1.3, 16)) == pytest.approx(math.pi * 1.69, rel=1e-15)
    assert area(ShapeFunction.from_modes(1.0, 16, mean=0.1)) == pytest.approx(math.pi * 1.21, rel=1e-15)
    # ellipse as a polar graph; area pi a b
    a, b = 1.1, 0.9
    ell = ShapeFunction.from_function(
        1.0, lambda t: a * b / np.sqrt((b * np.cos(t)) ** 2 + (a * np.sin(t)) ** 2) - 1.0, 128)
    assert area(ell) == pytest.approx(math.pi * a * b, rel=1e-12)
    assert area(translated_circle(1.0, (0.2, -0.1), 64)) == pytest.approx(math.pi, rel=1e-13)


def test_inner_product_orthogonality():
    th = nodes(32)
    assert inner(np.cos(2 * th), np.cos(2 * th)) == pytest.approx(0.5)
    assert inner(np.cos(2 * th), np.sin(2 * th)) == pytest.approx(0.0, abs=1e-15)
    assert inner(np.ones(32), np.ones(32)) == pytest.approx(1.0)


def test_boundary_frame_on_circle():
    f = boundary_frame(ShapeFunction.from_modes(1.0, 16, mean=0.5))
    np.testing.assert_allclose(f.normal, f.nu_e, atol=1e-15)
    np.testing.assert_allclose(f.metric, 1.0)
    p = boundary_frame(ShapeFunction.from_modes(1.0, 16, mean=0.5), "paper")
    np.testing.assert_allclose(p.metric, 1.5)
    with pytest.raises(ValueError):
        boundary_frame(ShapeFunction.zero(1.0, 16), "other")


def test_boundary_normal_is_unit_and_orthogonal_to_tangent():
    s = ShapeFunction.from_modes(1.0, 64, cos={3: 0.1}, sin={2: 0.05})
    f = boundary_frame(s)
    np.testing.assert_allclose(np.linalg.norm(f.normal, axis=1), 1.0, atol=1e-14)
    R, dR = s.radius, derivative(s)
    tangent = dR[:, None] * f.nu_e + R[:, None] * f.tau_e
    np.testing.assert_allclose(np.sum(tangent * f.normal, axis=1), 0.0, atol=1e-13)
    # geometric metric: rho_t = m V with m = |(R, R')| / R
    np.testing.assert_allclose(f.metric, np.hypot(R, dR) / R)


def test_translated_circle_geometry():
    v = (0.2, -0.1)
    s = translated_circle(1.0, v, 64)
    th = s.theta
    x, y = s.radius * np.cos(th), s.radius * np.sin(th)
    np.testing.assert_allclose(np.hypot(x - v[0], y - v[1]), 1.0, atol=1e-15)


@pytest.mark.parametrize("v", [(0.2, 0.0), (-0.1, 0.15), (0.0, -0.25)])
def test_recenter_translated_circle_gives_circle(v):
    s = translated_circle(1.0, v, 128)
    np.testing.assert_allclose(recenter(s, v).samples, 0.0, atol=1e-14)


@given(st.floats(-0.15, 0.15), st.floats(-0.15, 0.15))
def test_recenter_round_trip(vx, vy):
    s = ShapeFunction.from_modes(1.0, 128, mean=0.01, cos={2: 0.04}, sin={3: 0.02})
    back = recenter(recenter(s, (vx, vy)), (-vx, -vy))
    np.testing.assert_allclose(back.samples, s.samples, atol=1e-11)


def test_recenter_rejects_large_translation():
    with pytest.raises(ShapeError, match="star-shaped"):
        recenter(ShapeFunction.zero(1.0, 32), (1.2, 0.0))


def test_angle_map_of_translated_circle():
    v = np.array([0.1, 0.05])
    s = translated_circle(1.0, v, 32)
    th = s.theta
    x, y = s.radius * np.cos(th), s.radius * np.sin(th)
    expect = np.unwrap(np.arctan2(y - v[1], x - v[0]))
    got = angle_map(s, v, th)
    np.testing.assert_allclose(np.mod(got - expect + np.pi, 2 * np.pi) - np.pi, 0.0, atol=1e-14)
    assert np.all(np.abs(got - th) < np.pi / 2)


def test_area_is_preserved_by_recentering():
    s = ShapeFunction.from_modes(1.0, 128, cos={2: 0.05}, sin={3: 0.03})
    assert area(recenter(s, (0.1, -0.05))) == pytest.approx(area(s), rel=1e-12)
