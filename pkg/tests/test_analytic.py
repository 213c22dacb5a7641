import warnings
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import quad

from ramanfwm.analysis import purity, rate_bracket
from ramanfwm.analytic import (LongPulseWarning, WaveguideSpec, collision_coords,
                               jta_general_quadrature, jta_long_pulse, kernel_rms_width,
                               lattice_delta, phase_Phi)
from ramanfwm.errors import QuadratureError, ValidationError
from ramanfwm.grid import Axis, TimeGrid
from ramanfwm.pump import gaussian_pump
from ramanfwm.response import W_spectrum

TP = 0.1e-12
BETA = 0.2e-12


def sym_spec(**kw):
    base = WaveguideSpec(0.1, 0.1, 0.1, -BETA, BETA, 1.0, 295.0, 60e12)
    return replace(base, **kw)


@pytest.fixture(scope="module")
def grid():
    return TimeGrid.from_span(1.6e-12, 128)


def test_spec_validation():
    with pytest.raises(ValidationError):
        WaveguideSpec(0.1, 0.1, 0.1, 1e-13, -1e-13, 0.0)
    with pytest.raises(ValidationError):
        WaveguideSpec(0.1, 0.1, 0.1, 1e-13, -1e-13, 1.0, T=-1.0)
    s = sym_spec(betas_s=(1e-26,))
    assert s.has_gvd and not s.without_gvd().has_gvd


def test_collision_coords_examples():
    s = WaveguideSpec(0.1, 0.1, 0.1, -1e-13, 3e-13, 2.0)
    z, t = collision_coords(0.3e-12, 0.3e-12, s)
    assert z == 2.0 and t == pytest.approx(0.3e-12)
    z, _ = collision_coords(s.dbeta * s.L, 0.0, s)
    assert z == pytest.approx(0.0, abs=1e-15)
    z, t = collision_coords(0.2e-12, -0.1e-12, sym_spec())
    assert t == pytest.approx(0.05e-12)
    with pytest.raises(ValidationError):
        collision_coords(0.0, 0.0, sym_spec(beta1s=BETA))


@settings(max_examples=50, deadline=None)
@given(st.floats(0, 1), st.floats(-1e-12, 1e-12), st.floats(-5e-13, 5e-13),
       st.floats(-5e-13, 5e-13))
def test_collision_coords_invert_propagation(frac, tc, b1s, b1i):
    if abs(b1s - b1i) < 1e-15:
        return
    s = WaveguideSpec(0.1, 0.1, 0.1, b1s, b1i, 1.5)
    zc = frac * s.L
    ts, ti = tc + b1s * (s.L - zc), tc + b1i * (s.L - zc)
    z, t = collision_coords(ts, ti, s)
    assert z == pytest.approx(zc, abs=1e-9)
    assert t == pytest.approx(tc, abs=1e-24)


def test_phase_matches_nested_quadrature(grid, instant):
    s = sym_spec(gamma_p=0.3, gamma_s=0.2, gamma_i=0.1)
    p = gaussian_pump(5.0, TP, grid)

    def power(t):
        return 5.0 * np.exp(-t ** 2 / TP ** 2)

    for z, ts, ti in [(0.3, 0.05e-12, -0.1e-12), (0.8, -0.2e-12, 0.15e-12), (0.0, 0.1e-12, 0.1e-12)]:
        tau_s, tau_i = ts - s.beta1s * (s.L - z), ti - s.beta1i * (s.L - z)
        ref = s.gamma_p * z * (power(tau_s) + power(tau_i))
        ref += quad(lambda zz: 2 * s.gamma_s * power(ts - s.beta1s * (s.L - zz)), z, s.L,
                    epsabs=1e-14, epsrel=1e-13)[0]
        ref += quad(lambda zz: 2 * s.gamma_i * power(ti - s.beta1i * (s.L - zz)), z, s.L,
                    epsabs=1e-14, epsrel=1e-13)[0]
        got = phase_Phi(p, s, instant, z, ts, ti)
        assert abs(got - ref) < 1e-8


def test_phase_limits(grid, silica):
    p = gaussian_pump(5.0, TP, grid)
    ts, ti = np.meshgrid(grid.t[::8], grid.t[::8], indexing="ij")
    s0 = sym_spec(gamma_p=0.0, gamma_s=0.0, gamma_i=0.0)
    assert np.all(phase_Phi(p, s0, silica, 0.4, ts, ti) == 0)
    s = sym_spec()
    # at z = L the XPM terms telescope away
    from ramanfwm.pump import spm_phase
    pp = replace(p, gamma_p=s.gamma_p)
    ref = spm_phase(pp, silica, s.L, ts, None) + spm_phase(pp, silica, s.L, ti, None)
    assert np.allclose(phase_Phi(p, s, silica, s.L, ts, ti), ref, atol=1e-12)


def test_long_pulse_box_form(grid, instant):
    s = sym_spec()
    p = gaussian_pump(1.0, TP, grid)
    A = jta_long_pulse(p, s, instant, npm=False, check=False)
    ts, ti = np.meshgrid(grid.t, grid.t, indexing="ij")
    zc, tc = collision_coords(ts, ti, s)
    inside = (zc > 0) & (zc < s.L)
    ref = 1j * 0.1 / abs(s.dbeta) * np.exp(-tc ** 2 / TP ** 2)
    # the pump is interpolated between samples, so compare against the peak
    tol = 1e-3 * np.abs(ref).max()
    assert np.max(np.abs(A.data[inside] - ref[inside])) < tol
    outside = (zc < -1e-9) | (zc > s.L + 1e-9)
    assert np.all(A.data[outside] == 0)
    edge = (np.abs(zc) < 1e-9) | (np.abs(zc - s.L) < 1e-9)
    # on the box edge rounding decides between 0, 1/2 and 1
    assert np.any(edge)
    assert np.all(np.abs(A.data[edge]) <= np.abs(ref[edge]) + tol)


def test_long_pulse_scale_is_sqrt_r(silica, instant):
    g = TimeGrid.from_span(160e-12, 128)
    s = WaveguideSpec(0.1, 0.1, 0.1, -20e-12, 20e-12, 1.0, 300.0, 2 * np.pi * 9.5e12)
    p = gaussian_pump(1.0, 10e-12, g)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", LongPulseWarning)
        a = jta_long_pulse(p, s, silica, npm=False)
    b = jta_long_pulse(p, s, instant, npm=False)
    ratio = np.linalg.norm(a.data) / np.linalg.norm(b.data)
    assert ratio == pytest.approx(np.sqrt(rate_bracket(silica, s.Omega, s.T)), rel=1e-12)


def test_long_pulse_warning(grid, silica):
    p = gaussian_pump(1.0, TP, grid)
    with pytest.warns(LongPulseWarning):
        jta_long_pulse(p, sym_spec(), silica)
    assert kernel_rms_width(silica.__class__(silica.model.__class__.instantaneous(), 1e-15,
                                             np.array([1e15])), 1e14, 0.0) == 0.0


def test_zero_pump_gives_zero(grid, silica):
    p = gaussian_pump(0.0, TP, grid)
    A = jta_general_quadrature(p, sym_spec(), silica, npm=False)
    assert not np.any(A.data)


def test_quadrature_delta_part_matches_long_pulse(grid, instant):
    s = sym_spec()
    p = gaussian_pump(5.0, TP, grid)
    a = jta_long_pulse(p, s, instant, check=False)
    b = jta_general_quadrature(p, s, instant)
    assert np.max(np.abs(a.data - b.data)) < 1e-9 * np.abs(a.data).max()


def test_quadrature_exchange_symmetry(grid, instant):
    p = gaussian_pump(1.0, TP, grid)
    A = jta_general_quadrature(p, sym_spec(), instant, npm=False,
                               regularization="split-step").data
    # time reversal with exchange: A(t_s, t_i) = A(-t_i, -t_s) on indices 1..N-1
    core = A[1:, 1:]
    assert np.max(np.abs(core - core[::-1, ::-1].T)) < 1e-12 * np.abs(A).max()


def test_quadrature_rejects_gvd_and_reports(grid, silica):
    p = gaussian_pump(1.0, TP, grid)
    with pytest.raises(ValidationError):
        jta_general_quadrature(p, sym_spec(betas_s=(-2e-26,)), silica)
    with pytest.raises(ValidationError):
        jta_general_quadrature(p, sym_spec(), silica, nodes=4)
    with pytest.raises(QuadratureError):
        jta_general_quadrature(p, sym_spec(), silica, nodes=3, max_nodes=9, rtol=1e-14)
    A = jta_general_quadrature(p, sym_spec(), silica, npm=False)
    assert A.meta["rel_change"] < 1e-6 and A.meta["nodes"] >= 129


def test_lattice_delta_sums_to_one():
    # the profile has period 2 span; sampled over one period it sums to one
    n, span = 64, 1.0
    d = np.arange(-n // 2, n // 2) * (2 * span / n)
    assert np.sum(lattice_delta(d, span, n)) * 2 * span / n == pytest.approx(1.0, rel=1e-12)
    assert lattice_delta(0.0, span, n) == pytest.approx((n - 1) / (2 * span))


@pytest.fixture(scope="module")
def long_setup():
    # T_p = 10 ps; idler axis offset by half a sample so no node sits on a box edge
    n = 128
    out = {}
    for Tp in (10e-12, 20e-12):
        g = TimeGrid.from_span(16 * Tp, n)
        axes = (Axis(n, g.dt, g.t0), Axis(n, g.dt, g.t0 + g.dt / 2))
        s = WaveguideSpec(0.1, 0.1, 0.1, -2 * Tp, 2 * Tp, 1.0, 295.0, 60e12)
        out[Tp] = (gaussian_pump(1.0, Tp, g, gamma_p=0.1), s, axes)
    return out


@pytest.mark.parametrize("nu, npm", [(9.5e12, True), (13.2e12, False), (60e12 / (2 * np.pi), True)])
def test_long_pulse_limit_within_one_percent(long_setup, silica, nu, npm):
    p, s, axes = long_setup[10e-12]
    s = replace(s, Omega=2 * np.pi * nu)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", LongPulseWarning)
        a = jta_long_pulse(p, s, silica, axes, npm=npm)
    b = jta_general_quadrature(p, s, silica, axes, npm=npm)
    assert np.linalg.norm(a.data - b.data) / np.linalg.norm(b.data) < 0.01


def test_long_pulse_factorization_purity(long_setup, silica):
    p, s, axes = long_setup[20e-12]
    s = replace(s, Omega=2 * np.pi * 40e12)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", LongPulseWarning)
        a = jta_long_pulse(p, s, silica, axes, npm=False)
    b = jta_general_quadrature(p, s, silica, axes, npm=False)
    assert abs(purity(a) - purity(b)) < 0.005


def test_W_at_zero_matches_bracket(silica):
    Om, T = 2 * np.pi * 9.5e12, 300.0
    assert abs(W_spectrum(silica, Om, T, 0.0)) ** 2 == pytest.approx(
        float(rate_bracket(silica, Om, T)), rel=1e-14)
