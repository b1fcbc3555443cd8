import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from droplet.coords import (
    _extrapolate_centre, decompose, fit_decay_rate, invariance_check, matrix_M, phi, phi_jacobian,
    project_mode1, recompose, reduced_rhs, track,
)
from droplet.dynamics import DynamicsConfig, evolve, velocity
from droplet.errors import DecompositionError
from droplet.shape import ShapeFunction, inner, translated_circle

small = st.floats(-0.02, 0.02)


def shape_from(c2, s2, c3, s3, c1=0.0, s1=0.0, n=64):
    return ShapeFunction.from_modes(1.0, n, cos={1: c1, 2: c2, 3: c3}, sin={1: s1, 2: s2, 3: s3})


@pytest.mark.parametrize("v", [(0.1, 0.0), (-0.05, 0.12), (0.0, 0.2)])
def test_translated_circle_decomposes_exactly(v):
    dec = decompose(translated_circle(1.0, v, 64))
    np.testing.assert_allclose(dec.v, v, atol=1e-14)
    assert np.max(np.abs(dec.rho_bar.samples)) < 1e-14


@given(small, small, small, small, small, small)
def test_decomposition_is_orthogonal_and_invertible(c1, s1, c2, s2, c3, s3):
    shape = shape_from(c2, s2, c3, s3, c1, s1)
    dec = decompose(shape)
    th = dec.rho_bar.theta
    assert abs(inner(dec.rho_bar.samples, np.cos(th))) <= 1e-10
    assert abs(inner(dec.rho_bar.samples, np.sin(th))) <= 1e-10
    back = recompose(dec.v, dec.rho_bar)
    np.testing.assert_allclose(back.samples, shape.samples, atol=1e-9)


def test_decomposition_of_mode_free_shape_is_trivial():
    shape = shape_from(0.03, 0.0, 0.0, 0.02)
    dec = decompose(shape)
    # even and odd parts cannot produce a net shift at first order; v is O(rho^2)
    assert np.linalg.norm(dec.v) < 1e-3
    assert dec.newton_iters <= 5


def test_phi_jacobian_at_the_circle():
    J = phi_jacobian(ShapeFunction.zero(1.0, 64))
    np.testing.assert_allclose(J, -0.5 * np.eye(2), atol=1e-10)
    np.testing.assert_allclose(phi(ShapeFunction.zero(1.0, 64), (0.0, 0.0)), 0.0)


@given(small, small, small)
def test_phi_jacobian_perturbation_bound(c2, s3, c1):
    shape = shape_from(c2, 0.0, 0.0, s3, c1)
    sup = np.max(np.abs(shape.samples))
    J = phi_jacobian(shape)
    assert np.max(np.abs(J + 0.5 * np.eye(2))) <= 2 * sup + 1e-9


def test_decompose_rejects_large_shapes():
    with pytest.raises(DecompositionError):
        decompose(ShapeFunction.from_modes(1.0, 32, cos={2: 0.35}))


def test_matrix_M_is_identity_on_circle():
    np.testing.assert_allclose(matrix_M(ShapeFunction.zero(1.0, 32)), np.eye(2))


def test_project_mode1():
    th = ShapeFunction.zero(1.0, 32).theta
    p, rest = project_mode1(0.3 * np.cos(th) - 0.2 * np.sin(th) + np.cos(2 * th))
    np.testing.assert_allclose(p, [0.3, -0.2], atol=1e-15)
    np.testing.assert_allclose(rest, np.cos(2 * th), atol=1e-15)


def test_reduced_system_matches_full_flow():
    # oracle: differentiate the decomposition along the full flow rho_t = G(rho)
    cfg = DynamicsConfig(n=64)
    rho_bar = decompose(shape_from(0.03, 0.01, 0.0, 0.02)).rho_bar
    v = np.array([0.05, -0.02])
    rho = recompose(v, rho_bar)
    G = velocity(rho, cfg).values
    h = 1e-5
    dp = decompose(ShapeFunction(1.0, rho.samples + h * G))
    dm = decompose(ShapeFunction(1.0, rho.samples - h * G))
    v_dot_fd = (dp.v - dm.v) / (2 * h)
    rb_dot_fd = (dp.rho_bar.samples - dm.rho_bar.samples) / (2 * h)

    red = reduced_rhs(rho_bar, cfg, v)
    np.testing.assert_allclose(red.v_dot, v_dot_fd, atol=1e-8)
    np.testing.assert_allclose(red.rho_bar_dot, rb_dot_fd, atol=1e-7)
    # independent of the centre
    np.testing.assert_array_equal(reduced_rhs(rho_bar, cfg).v_dot, red.v_dot)


def test_reduced_system_requires_geometric_metric():
    with pytest.raises(ValueError):
        reduced_rhs(ShapeFunction.zero(1.0, 16), DynamicsConfig(n=16, metric="paper"))


def test_centre_velocity_is_quadratic_in_shape():
    cfg = DynamicsConfig(n=64)
    base = decompose(shape_from(0.02, 0.0, 0.0, 0.02)).rho_bar
    v1 = reduced_rhs(base, cfg).v_dot
    v2 = reduced_rhs(decompose(base.scaled(0.5)).rho_bar, cfg).v_dot
    assert np.linalg.norm(v1) > 0
    assert np.linalg.norm(v2) / np.linalg.norm(v1) == pytest.approx(0.25, rel=0.05)


def test_flux_is_translation_invariant():
    shape = shape_from(0.03, 0.0, 0.02, 0.01)
    assert invariance_check(shape, (0.1, -0.05)) < 1e-10


def test_rate_fit_on_synthetic_data():
    t = np.linspace(0, 4, 60)
    rate, ok, note = fit_decay_rate(t, 0.1 * np.exp(-2.5 * t))
    assert rate == pytest.approx(2.5, rel=1e-10) and ok and note == "ok"


def test_rate_fit_flags():
    t = np.linspace(0, 1, 10)
    assert fit_decay_rate(t, np.exp(-t))[0] is None
    t = np.linspace(0, 1, 40)
    rate, ok, note = fit_decay_rate(t, np.exp(-0.5 * t))
    assert rate == pytest.approx(0.5) and not ok and "decades" in note
    assert fit_decay_rate(t, np.zeros(40))[2].startswith("not applicable")


def test_centre_extrapolation_is_exact_for_double_rate_decay():
    t = np.linspace(0, 2, 41)
    v_inf = np.array([0.1, -0.2])
    v = v_inf + np.outer(np.exp(-6.0 * t), [0.3, 0.1])
    np.testing.assert_allclose(_extrapolate_centre(t, v, 3.0), v_inf, atol=1e-14)


def test_track_at_equilibrium_reports_no_rate():
    traj = evolve(ShapeFunction.zero(1.0, 32), DynamicsConfig(n=32, T=0.5))
    tr = track(traj)
    assert tr.decay_rate is None
    assert tr.rate_note.startswith("not applicable")
    np.testing.assert_allclose(tr.v_inf, 0.0)
    assert not tr.failures


def test_track_records_centre_drift():
    cfg = DynamicsConfig(n=64, T=1.0)
    tr = track(evolve(shape_from(0.03, 0.0, 0.0, 0.03), cfg))
    assert tr.v.shape == (len(tr.times), 2)
    assert np.all(np.isfinite(tr.v))
    assert tr.rho_bar_l2[-1] < tr.rho_bar_l2[0]
    # modes column 0 is the signed mean, columns 2..4 are amplitudes
    assert tr.rho_bar_modes.shape[1] == 5
    assert math.isfinite(tr.v_inf[0])
