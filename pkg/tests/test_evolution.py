import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from waterwaves.errors import StripViolation
from waterwaves.evolution import (
    EvolutionParams,
    SurfaceState,
    compute_BV,
    conserved_mass,
    dno,
    hamiltonian,
    initial_state,
    linear_frequency,
    rk4_step,
    simulate,
    zakharov_rhs,
)
from waterwaves.spectral import l2_norm, spectral_derivative

P = EvolutionParams(n_x=64, n_z=24, delta=0.05, dt=0.05)
X = P.grid.x


def state(eta, psi, t=0.0):
    return SurfaceState(t, eta + 0 * X, psi + 0 * X)


def test_surface_state_validation():
    with pytest.raises(ValueError):
        SurfaceState(0.0, np.zeros(8), np.zeros(9))
    with pytest.raises(ValueError):
        SurfaceState(0.0, np.full(8, np.nan), np.zeros(8))


def test_params_resolution():
    p = EvolutionParams(n_x=128, n_z=64)
    r = p.resolved(np.zeros(128))
    assert r.delta == pytest.approx(0.05)
    assert r.dt == pytest.approx(0.25 / np.sqrt(64 * np.tanh(64)))
    with pytest.raises(ValueError):
        p.map_params()


def test_compute_bv_examples():
    psi = np.sin(2 * X)
    g = np.cos(X)
    b, v = compute_BV(np.zeros(64), psi, g, P.grid)
    np.testing.assert_allclose(b, g, atol=1e-15)
    np.testing.assert_allclose(v, 2 * np.cos(2 * X), atol=1e-12)
    b, v = compute_BV(0.1 * np.cos(X), np.zeros(64), np.zeros(64), P.grid)
    assert np.all(b == 0) and np.all(v == 0)


def test_compute_bv_identity_on_dno_output():
    eta, psi = 0.1 * np.cos(X), np.sin(X)
    g = dno(eta, psi, P)
    b, v = compute_BV(eta, psi, g, P.grid)
    assert np.max(np.abs(g - (b - spectral_derivative(eta, P.grid) * v))) <= 1e-12


@settings(max_examples=25, deadline=None)
@given(st.floats(-0.3, 0.3), st.floats(-2, 2), st.integers(1, 8), st.integers(0, 100))
def test_compute_bv_identity_property(a, c, k, seed):
    rng = np.random.default_rng(seed)
    eta = a * np.cos(k * X)
    psi = c * np.sin(X) + 0.1 * rng.standard_normal() * np.cos(3 * X)
    g = rng.standard_normal(64)
    b, v = compute_BV(eta, psi, g, P.grid)
    assert np.max(np.abs(g - (b - spectral_derivative(eta, P.grid) * v))) <= 1e-12 * (1 + np.max(np.abs(g)))


def test_rhs_rest_and_constant():
    d_eta, d_psi = zakharov_rhs(state(0.0, 0.0), P)
    assert np.all(d_eta == 0) and np.all(d_psi == 0)
    c = 0.02
    d_eta, d_psi = zakharov_rhs(state(c, 0.0), P)
    assert np.max(np.abs(d_eta)) < 1e-15
    np.testing.assert_allclose(d_psi, -P.g * c, atol=1e-15)


def test_rhs_linearization():
    k = 2.0
    flat = P.grid
    for eps in (1e-3, 5e-4):
        d_eta, d_psi = zakharov_rhs(state(0.0, eps * np.cos(k * X)), P)
        lin = eps * k * np.tanh(k) * np.cos(k * X)
        # spatial error of the operator is O(dz^2) relative, the nonlinear rest O(eps^2)
        assert l2_norm(d_eta - lin, flat) <= 2e-3 * l2_norm(lin, flat)
        assert np.max(np.abs(d_psi)) <= 10 * eps**2


def test_rk4_rest_and_zero_step():
    rest = state(0.0, 0.0)
    after = rk4_step(rest, P)
    assert np.all(after.eta == 0) and np.all(after.psi == 0)
    assert after.t == pytest.approx(P.dt)
    s = state(1e-3 * np.cos(2 * X), 0.0)
    p0 = EvolutionParams(n_x=64, n_z=24, delta=0.05, dt=0.0)
    same = rk4_step(s, p0)
    assert np.array_equal(same.eta, s.eta) and np.array_equal(same.psi, s.psi)


def test_rk4_linear_standing_wave_period():
    a, k = 1e-4, 2.0
    p = EvolutionParams(n_x=64, n_z=32, delta=0.05, dt=0.05)
    period = 2 * np.pi / linear_frequency(k)
    n = int(round(period / p.dt))
    p = EvolutionParams(n_x=64, n_z=32, delta=0.05, dt=period / n)
    s0 = initial_state(p, "standing_wave", a, k)
    s = s0
    for _ in range(n):
        s = rk4_step(s, p)
    assert np.max(np.abs(s.eta - s0.eta)) <= 1e-3 * a


def test_rk4_time_order_by_self_convergence():
    p = EvolutionParams(n_x=32, n_z=16, delta=0.05)
    s0 = initial_state(p, "traveling_wave_linear", 0.05, 1.0)
    t_end = 0.8

    def run(dt):
        q = EvolutionParams(n_x=32, n_z=16, delta=0.05, dt=dt)
        s = s0
        for _ in range(int(round(t_end / dt))):
            s = rk4_step(s, q)
        return s

    ref = run(0.0125)
    errs = [np.max(np.abs(run(dt).eta - ref.eta)) for dt in (0.2, 0.1, 0.05)]
    orders = np.log2(np.array(errs[:-1]) / np.array(errs[1:]))
    assert np.all(orders > 3.7)


def test_hamiltonian_examples():
    assert hamiltonian(state(0.0, 0.0), P) == 0.0
    a, k = 0.01, 3.0
    h = hamiltonian(state(a * np.cos(k * X), 0.0), P)
    assert h == pytest.approx(P.g * a**2 * np.pi / 2, rel=1e-12)
    rng = np.random.default_rng(3)
    for _ in range(5):
        psi = rng.standard_normal(64)
        assert hamiltonian(state(0.0, psi), P) >= -1e-9 * l2_norm(psi, P.grid) ** 2


def test_mass_examples():
    assert conserved_mass(state(0.0, 0.0), P.grid) == 0.0
    assert abs(conserved_mass(state(0.3 * np.cos(2 * X), 0.0), P.grid)) < 1e-15
    assert conserved_mass(state(0.1, 0.0), P.grid) == pytest.approx(0.1 * 2 * np.pi)


def test_initial_states():
    s = initial_state(P, "traveling_wave_linear", 1e-3, 2.0)
    w = linear_frequency(2.0)
    np.testing.assert_allclose(s.psi, 1e-3 / w * np.sin(2 * X), atol=1e-18)
    with pytest.raises(ValueError):
        initial_state(P, "soliton", 1e-3, 2.0)


def test_simulate_yields_strided_states():
    s0 = initial_state(P, "standing_wave", 1e-3, 2.0)
    seen = []
    out = list(simulate(s0, P, 6, stride=2, callback=lambda i, s: seen.append(i)))
    assert [round(s.t / P.dt) for s in out] == [0, 2, 4, 6]
    assert seen == list(range(1, 7))


def test_simulate_rejects_strip_violation_before_solving():
    s0 = state(-1.05 + 0.01 * np.cos(X), 0.0)
    with pytest.raises(StripViolation):
        next(simulate(s0, P, 1))
