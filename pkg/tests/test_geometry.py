import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from waterwaves.errors import SeparationViolation, StripViolation
from waterwaves.geometry import (
    MapParams,
    build_domain_map,
    check_separation,
    default_delta,
    lambda_apply,
    w1inf_norm,
)
from waterwaves.spectral import Grid, spectral_derivative

GRID = Grid(128)
X = GRID.x


def test_flat_map_is_linear_in_z():
    p = MapParams(h_b=1.5, delta=0.05, n_z=33)
    m = build_domain_map(np.zeros(128), GRID, p)
    np.testing.assert_allclose(m.rho, np.broadcast_to(1.5 * p.z[:, None], m.shape), atol=1e-15)
    np.testing.assert_allclose(m.d_z_rho, 1.5, atol=1e-13)
    np.testing.assert_allclose(m.d_z_rho_exact, 1.5, atol=1e-15)
    assert np.all(m.grad_x_rho == 0.0)


def test_constant_elevation():
    # the zero mode of exp(delta z <D>) is exp(delta z), not 1
    c, delta = 0.03, 0.05
    p = MapParams(h_b=1.0, delta=delta, n_z=17)
    m = build_domain_map(np.full(128, c), GRID, p)
    z = p.z[:, None]
    rho = (1 + z) * np.exp(delta * z) * c + z + 0 * X
    np.testing.assert_allclose(m.rho, rho, atol=1e-15)
    d_z = c * np.exp(delta * z) * (1 + delta * (1 + z)) + 1.0 + 0 * X
    np.testing.assert_allclose(m.d_z_rho_exact, d_z, atol=1e-14)
    np.testing.assert_allclose(m.rho[-1], c, atol=1e-15)


def test_constant_elevation_without_smoothing():
    c = 0.03
    p = MapParams(h_b=1.0, delta=0.0, n_z=17)
    m = build_domain_map(np.full(128, c), GRID, p)
    z = p.z[:, None]
    np.testing.assert_allclose(m.rho, (1 + z) * c + z + 0 * X, atol=1e-15)
    np.testing.assert_allclose(m.d_z_rho_exact, c + 1.0, atol=1e-14)


def test_separation_bound_on_wavy_surface():
    eta = 0.1 * np.cos(X)
    p = MapParams(h_b=1.0, delta=default_delta(eta, GRID), n_z=64)
    m = build_domain_map(eta, GRID, p)
    h = check_separation(eta, p)
    assert h == pytest.approx(0.9)
    assert np.all(m.d_z_rho_exact >= min(h / 3, 1.0))
    assert np.all(m.d_z_rho > 0)


def test_exact_boundary_rows():
    eta = 0.2 * np.sin(2 * X) + 0.05 * np.cos(5 * X)
    m = build_domain_map(eta, GRID, MapParams(h_b=1.0, delta=0.04, n_z=40))
    assert np.array_equal(m.rho[-1], eta)
    assert np.all(m.rho[0] == -1.0)


def test_check_separation_examples():
    p = MapParams(h_b=1.0)
    assert check_separation(np.zeros(128), p) == 1.0
    assert check_separation(-0.99 + 0.005 * np.cos(X), p) == pytest.approx(0.005)
    with pytest.raises(StripViolation):
        check_separation(-1.0 + 0.0 * X, p)
    with pytest.raises(StripViolation):
        check_separation(-1.2 + 0.1 * np.cos(X), p)


def test_build_rejects_thin_strip():
    eta = -0.95 + 0.01 * np.cos(X)
    with pytest.raises(StripViolation):
        build_domain_map(eta, GRID, MapParams(h_b=1.0, delta=0.01))


def test_separation_violation_is_raised():
    # a large delta with a steep surface breaks the monotonicity of rho
    eta = 0.3 * np.cos(20 * X)
    with pytest.raises((SeparationViolation, ValueError)):
        build_domain_map(eta, GRID, MapParams(h_b=1.0, delta=0.5, n_z=32))


def test_lambda_on_flat_map():
    p = MapParams(h_b=2.0, delta=0.05, n_z=33)
    m = build_domain_map(np.zeros(128), GRID, p)
    f = np.broadcast_to(p.z[:, None], m.shape).copy()
    np.testing.assert_allclose(lambda_apply(f, m, 1), 0.5, atol=1e-13)
    g = np.broadcast_to(np.cos(3 * p.z)[:, None], m.shape).copy()
    assert np.max(np.abs(lambda_apply(g, m, 2))) < 1e-13


@settings(max_examples=25, deadline=None)
@given(
    st.floats(0.0, 0.3),
    st.floats(0.0, 0.1),
    st.integers(1, 6),
    st.floats(0.5, 2.0),
)
def test_lambda_of_rho(a, b, k, h_b):
    eta = a * np.cos(X) + b * np.sin(k * X)
    p = MapParams(h_b=h_b, delta=default_delta(eta, GRID), n_z=24)
    m = build_domain_map(eta, GRID, p)
    np.testing.assert_allclose(lambda_apply(m.rho, m, 1), 1.0, atol=1e-12)
    assert np.max(np.abs(lambda_apply(m.rho, m, 2))) < 1e-12
    assert np.all(m.d_z_rho_exact >= m.separation_bound)
    # gradient bound with the default delta
    eta_x = np.max(np.abs(spectral_derivative(eta, GRID)))
    assert np.max(np.abs(m.grad_x_rho)) <= 2 * eta_x + p.delta * w1inf_norm(eta, GRID) + 1e-12


def test_lambda_commutes_with_analytic_derivatives():
    k, h_b = 2.0, 1.0
    errors = []
    for n_z in (16, 32, 64):
        p = MapParams(h_b=h_b, delta=0.05, n_z=n_z)
        m = build_domain_map(np.zeros(128), GRID, p)
        z = p.z[:, None]
        f = np.cos(k * X) * np.cosh(k * h_b * (z + 1))
        dy = k * np.cos(k * X) * np.sinh(k * h_b * (z + 1))
        dx = -k * np.sin(k * X) * np.cosh(k * h_b * (z + 1))
        assert np.max(np.abs(lambda_apply(f, m, 2) - dx)) < 1e-11
        errors.append(np.max(np.abs(lambda_apply(f, m, 1) - dy)))
    slope = np.log2(errors[0] / errors[2]) / 2
    assert 1.8 <= slope <= 2.3


def test_default_delta():
    assert default_delta(np.zeros(128), GRID) == pytest.approx(0.05)
    eta = 2.0 * np.cos(X)
    assert default_delta(eta, GRID) == pytest.approx(0.05 / w1inf_norm(eta, GRID))
