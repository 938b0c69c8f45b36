import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from cfieldlab.cosmology import BigRipError
from cfieldlab.field_solver import (FieldState, InstabilityError, ManufacturedField, build_problem, carrier_frequency,
                                    cgl_coefficients, evolve, manufactured_residual, positive_frequency_velocity,
                                    rhs_first_order, rhs_second_order)
from cfieldlab.grid import Grid, gaussian, plane_wave

G1 = Grid.uniform(1, 64, 2 * math.pi)


def test_presets_fix_angles_and_order():
    assert build_problem("kg").phase_ratio == 1
    assert build_problem("schrodinger").order == "first"
    el = build_problem("elliptic")
    assert el.frame.omega1 == pytest.approx(math.pi / 2) and not el.evolvable
    assert build_problem("de_sitter_kg", {"H": 0.3}).scale.H == 0.3


def test_heat_linear_part():
    pr = build_problem("heat", {"m": 2.0, "hbar": 3.0})
    assert abs(pr.linear_coefficient() - 3.0 / 4.0) < 1e-15


@pytest.mark.parametrize("sign", [1, -1])
def test_cgl_gamma_real_at_quarter_turn(sign):
    if sign == -1:
        with pytest.raises(ValueError):
            build_problem("cgl", {"sign": -1})
        return
    gamma, l1, l2 = cgl_coefficients(build_problem("cgl", {"m": 0.5, "hbar": 2.0, "lambda1": 0.3, "lambda2": 1.5}))
    assert abs(gamma - 2.0) < 1e-14 and abs(l1 - 0.3) < 1e-14 and abs(l2 - 1.5) < 1e-14


def test_cgl_complex_lambda2_passes_through():
    gamma, l1, l2 = cgl_coefficients(build_problem("cgl", {"omega1": 0.5, "lambda2": 1.0 + 0.5j}))
    assert gamma.real > 0 and abs(l2 - (1 + 0.5j)) < 1e-14 and abs(l1 - 0.5) < 1e-14


@pytest.mark.parametrize("preset, ov", [
    ("nope", {}), ("kg", {"bogus": 1}), ("elliptic", {"evolve": True}), ("kg", {"omega1": 0.2}),
    ("heat", {"sign": -1}), ("cgl", {"lambda1": -1.0}), ("custom", {"order": "first", "omega1": -0.5}),
])
def test_inconsistent_builds_rejected(preset, ov):
    with pytest.raises((KeyError, ValueError)):
        build_problem(preset, ov)


def test_static_massless_rhs_vanishes():
    pr = build_problem("kg", {"m": 0.0})
    st_ = FieldState(0.0, np.full(G1.shape, 2.0 + 1j), G1, np.zeros(G1.shape))
    assert np.max(np.abs(rhs_second_order(pr, st_)[1])) < 1e-14


def test_plane_wave_rhs_is_phase_rotation():
    pr = build_problem("kg", {"c": 2.0, "m": 0.7, "hbar": 1.3})
    phi = plane_wave(G1, [3])
    om = math.sqrt(4 * 9 + (0.7 * 4 / 1.3) ** 2)
    _, dpi = rhs_second_order(pr, FieldState(0.0, phi, G1, -1j * om * phi))
    assert np.max(np.abs(dpi + om**2 * phi)) < 1e-11


def test_de_sitter_damping():
    H, n = 0.4, 2
    g = Grid.uniform(n, 16, 2 * math.pi)
    pr = build_problem("de_sitter_kg", {"H": H, "n_dim": n, "m": 0.0})
    pi = gaussian(g, 1.0)
    _, dpi = rhs_second_order(pr, FieldState(0.7, np.zeros(g.shape), g, pi))
    assert np.max(np.abs(dpi + n * H * pi)) < 1e-14


def test_schrodinger_rhs():
    pr = build_problem("schrodinger", {"m": 2.0, "hbar": 1.5, "lam": 0.8, "p": 3})
    u = gaussian(G1, 0.6, momentum=[1])
    expect = 1j * 1.5 / 4.0 * (G1.laplacian(u) + 0.8 * np.abs(u) ** 2 * u)
    assert np.max(np.abs(rhs_first_order(pr, FieldState(0.0, u, G1)) - expect)) < 1e-13
    pr_m = build_problem("schrodinger", {"m": 2.0, "hbar": 1.5, "lam": 0.8, "p": 3, "sign": -1})
    assert np.max(np.abs(rhs_first_order(pr_m, FieldState(0.0, u, G1)) + expect)) < 1e-13


def test_heat_rhs_and_zero_field():
    pr = build_problem("heat", {"m": 0.5})
    u = gaussian(G1, 0.6)
    assert np.max(np.abs(rhs_first_order(pr, FieldState(0.0, u, G1)) - G1.laplacian(u))) < 1e-13
    assert np.max(np.abs(rhs_first_order(pr, FieldState(0.0, 0 * u, G1)))) == 0


def test_massless_first_order_rejected():
    with pytest.raises(ZeroDivisionError):
        rhs_first_order(build_problem("schrodinger", {"m": 0.0}), FieldState(0.0, np.zeros(G1.shape), G1))


@given(st.integers(-31, 31), st.integers(1, 3))
def test_spectral_laplacian_of_mode(k, n):
    g = Grid.uniform(n, 64 if n == 1 else 16, 2 * math.pi)
    mode = [k if n == 1 else k % 8] + [1] * (n - 1)
    f = plane_wave(g, mode)
    k2 = float(np.sum(g.mode_wavenumber(mode) ** 2))
    assert np.max(np.abs(g.laplacian(f) + k2 * f)) < 1e-12 * max(1.0, k2)


def test_zero_data_stays_zero():
    pr = build_problem("kg", {"lam": 1.0})
    z = np.zeros(G1.shape)
    s, _ = evolve(pr, FieldState(0.0, z, G1, z), 1e-2, 0.5)
    assert np.max(np.abs(s.phi)) == 0


@pytest.mark.parametrize("mode, m, hbar", [([3], 1.0, 1.0), ([5], 0.5, 2.0)])
def test_heat_mode_decay(mode, m, hbar):
    pr = build_problem("heat", {"m": m, "hbar": hbar})
    u0 = plane_wave(G1, mode)
    s, _ = evolve(pr, FieldState(0.0, u0, G1), 1e-2, 1.0)
    k2 = mode[0] ** 2
    assert abs(s.phi[0] - math.exp(-hbar * k2 / (2 * m))) < 1e-8


def test_heat_norm_decreases_stepwise():
    pr = build_problem("heat")
    _, rec = evolve(pr, FieldState(0.0, gaussian(G1, 0.4), G1), 1e-3, 0.2,
                    {"n": lambda p, s: G1.l2_norm(s.phi)}, stride=1)
    norms = np.array(rec["n"])
    assert np.all(np.diff(norms) < 0)


def _kg_plane_wave_error(dt, T=0.5):
    pr = build_problem("kg")
    phi = plane_wave(G1, [20])
    pi = positive_frequency_velocity(pr, G1, phi)
    s, _ = evolve(pr, FieldState(0.0, phi, G1, pi), dt, T)
    om = float(carrier_frequency(pr, 400.0))
    return G1.l2_norm(s.phi - phi * np.exp(-1j * om * T)) / G1.l2_norm(phi)


def test_kg_plane_wave_fourth_order():
    errs = [_kg_plane_wave_error(dt) for dt in (2e-3, 1e-3, 5e-4)]
    ratios = [errs[0] / errs[1], errs[1] / errs[2]]
    assert all(r >= 14 for r in ratios)
    assert errs[-1] < 1e-8


def test_schrodinger_mass_conserved():
    pr = build_problem("schrodinger", {"lam0": 1.0})
    g = Grid.uniform(1, 128, 30.0)
    u0 = gaussian(g, 1.5, momentum=[3])
    s, _ = evolve(pr, FieldState(0.0, u0, g), 1e-3, 1.0)
    assert abs(g.l2_norm(s.phi) ** 2 / g.l2_norm(u0) ** 2 - 1) < 1e-8


def test_cgl_uniform_mode_follows_logistic_law():
    pr = build_problem("cgl", {"lambda1": 0.5, "lambda2": 1.0})
    u0 = np.full(G1.shape, 0.1 + 0j)
    T = 2.0
    s, _ = evolve(pr, FieldState(0.0, u0, G1), 1e-2, T)
    exact = 0.5 / (1.0 + (0.5 / 0.01 - 1.0) * math.exp(-2 * 0.5 * T))
    assert abs(np.abs(s.phi[0]) ** 2 - exact) < 1e-8


def test_big_rip_inside_run():
    pr = build_problem("custom", {"sigma": -2.0, "da0": 0.5, "n_dim": 3})
    g = Grid.uniform(3, 4, 2 * math.pi)
    z = np.zeros(g.shape)
    with pytest.raises(BigRipError):
        evolve(pr, FieldState(0.0, z, g, z), 1e-2, 2.0)


def test_growth_guard_and_antidissipative_allowance():
    pr = build_problem("custom", {"order": "second", "m": 0.0, "H": -3.0})
    phi = np.zeros(G1.shape, complex)
    pi = np.ones(G1.shape, complex)
    pr.antidissipative = False
    pr.growth_limit = 10.0
    with pytest.raises(InstabilityError):
        evolve(pr, FieldState(0.0, phi, G1, pi), 1e-2, 2.0)
    pr.antidissipative = True
    evolve(pr, FieldState(0.0, phi, G1, pi), 1e-2, 2.0)


def test_elliptic_not_evolvable():
    pr = build_problem("elliptic")
    z = np.zeros(G1.shape)
    with pytest.raises(ValueError):
        evolve(pr, FieldState(0.0, z, G1, z), 1e-2, 1.0)


def test_elliptic_manufactured_growth_mode():
    c, m, hb, k = 1.5, 0.4, 1.0, 2
    pr = build_problem("elliptic", {"c": c, "m": m, "hbar": hb})
    s = math.sqrt(c * c * k * k - (m * c * c / hb) ** 2)
    f = lambda t, X: np.exp(1j * k * X[0] + s * t)
    field = ManufacturedField(f, lambda t, X: s * f(t, X), lambda t, X: s * s * f(t, X))
    assert np.max(manufactured_residual(pr, field, [0.0, 0.3, 0.9], G1)) < 1e-8
    zero = ManufacturedField(*(lambda t, X: 0 * X[0],) * 3)
    assert np.max(manufactured_residual(pr, zero, [0.0], G1)) == 0


def test_kg_manufactured_plane_wave():
    pr = build_problem("kg", {"c": 3.0})
    om = float(carrier_frequency(pr, 16.0))
    f = lambda t, X: np.exp(1j * (4 * X[0] - om * t))
    field = ManufacturedField(f, lambda t, X: -1j * om * f(t, X), lambda t, X: -om * om * f(t, X))
    assert np.max(manufactured_residual(pr, field, [0.0, 0.5], G1)) < 1e-8


def test_manufactured_source_accounts_for_forcing():
    pr = build_problem("heat")
    f = lambda t, X: np.sin(X[0]) * (1 + t)
    # d_t f - (1/2) lap f = sin x + (1 + t) sin x / 2
    field = ManufacturedField(f, lambda t, X: np.sin(X[0]), source=lambda t, X: np.sin(X[0]) * (1 + (1 + t) / 2))
    assert np.max(manufactured_residual(pr, field, [0.0, 1.0], G1)) < 1e-12


def test_theta_drift_detected():
    pr = build_problem("custom", {"order": "second", "H": 1.0, "omega0": 0.5})
    pr.theta = 0.0
    z = np.zeros(G1.shape)
    with pytest.raises(ValueError):
        evolve(pr, FieldState(0.0, z, G1, z), 1e-2, 0.5)
