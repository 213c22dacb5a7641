"""Closed-form joint temporal amplitudes.

``jta_general_quadrature`` integrates the single-z-integral expression for the
JTA numerically and serves as the reference for the split-step propagator.
``jta_long_pulse`` is the limit in which the coupling kernel acts as a delta
function and photon pairs are created at the collision coordinates.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.interpolate import CubicSpline

from .errors import GridMismatchError, QuadratureError, ValidationError
from .grid import TIME, Axis, JointAmplitude, TimeGrid, to_time
from .pump import FieldInterpolant, PowerProfile, PumpField, spm_phase, xpm_phase
from .response import RamanModel, RamanResponse, W_spectrum, build_response, step


class LongPulseWarning(UserWarning):
    """The pump is not much longer than the coupling kernel."""


@dataclass(frozen=True)
class WaveguideSpec:
    """Waveguide and operating point.

    Parameters
    ----------
    gamma_p, gamma_s, gamma_i : float
        Nonlinear coefficients, 1/(W m).
    beta1s, beta1i : float
        Group slownesses relative to the pump, s/m.
    L : float
        Length, m.
    T : float
        Temperature, K.
    Omega : float
        Pump-idler detuning ``w_i0 - w_p0``, rad/s.
    betas_s, betas_i : tuple of float
        Higher-order dispersion ``(beta_2, beta_3, ...)`` of signal and idler.
    """

    gamma_p: float
    gamma_s: float
    gamma_i: float
    beta1s: float
    beta1i: float
    L: float
    T: float = 0.0
    Omega: float = 0.0
    betas_s: tuple = ()
    betas_i: tuple = ()

    def __post_init__(self):
        if not self.L > 0:
            raise ValidationError("L must be positive")
        if self.T < 0:
            raise ValidationError("T must be >= 0")
        object.__setattr__(self, "betas_s", tuple(float(b) for b in self.betas_s))
        object.__setattr__(self, "betas_i", tuple(float(b) for b in self.betas_i))

    @property
    def dbeta(self) -> float:
        return self.beta1s - self.beta1i

    @property
    def has_gvd(self) -> bool:
        return any(self.betas_s) or any(self.betas_i)

    def without_gvd(self) -> "WaveguideSpec":
        return replace(self, betas_s=(), betas_i=())


def _require_walkoff(spec: WaveguideSpec):
    if spec.beta1s == spec.beta1i:
        raise ValidationError("degenerate group slownesses (beta1s == beta1i)")


def collision_coords(t_s, t_i, spec: WaveguideSpec):
    """Creation position ``z_c`` and time ``t_c`` of a pair detected at ``(t_s, t_i)``."""
    _require_walkoff(spec)
    t_s = np.asarray(t_s, dtype=float)
    t_i = np.asarray(t_i, dtype=float)
    d = spec.dbeta
    z_c = spec.L - (t_s - t_i) / d
    t_c = (spec.beta1s * t_i - spec.beta1i * t_s) / d
    return z_c, t_c


def _axes(grid, pump: PumpField):
    if grid is None:
        grid = pump.grid
    if isinstance(grid, TimeGrid):
        return grid.time_axis, grid.time_axis
    ax_s, ax_i = grid
    if not (isinstance(ax_s, Axis) and isinstance(ax_i, Axis)):
        raise GridMismatchError("grid must be a TimeGrid or a pair of Axis")
    return ax_s, ax_i


def phase_Phi(pump: PumpField, spec: WaveguideSpec, resp: RamanResponse, z, t_s, t_i,
              profile: PowerProfile | None = None) -> np.ndarray:
    """Nonlinear phase of a pair created at ``z`` and detected at ``(t_s, t_i)``.

    ``t_s`` and ``t_i`` broadcast against each other.
    """
    profile = profile or PowerProfile(pump, resp)
    p = replace(pump, gamma_p=spec.gamma_p)
    t_s = np.asarray(t_s, dtype=float)
    t_i = np.asarray(t_i, dtype=float)
    tau_s = t_s - spec.beta1s * (spec.L - z)
    tau_i = t_i - spec.beta1i * (spec.L - z)
    L = spec.L
    out = spm_phase(p, resp, z, tau_s, profile) + spm_phase(p, resp, z, tau_i, profile)
    out = out + (xpm_phase(p, resp, spec.gamma_s, spec.beta1s, L, t_s, profile)
                 - xpm_phase(p, resp, spec.gamma_s, spec.beta1s, z, tau_s, profile))
    out = out + (xpm_phase(p, resp, spec.gamma_i, spec.beta1i, L, t_i, profile)
                 - xpm_phase(p, resp, spec.gamma_i, spec.beta1i, z, tau_i, profile))
    return out


def _rms_width(pump: PumpField) -> float:
    P = pump.power
    s = P.sum()
    if s == 0:
        return np.inf
    t = pump.t
    mu = (t * P).sum() / s
    return float(np.sqrt(((t - mu) ** 2 * P).sum() / s))


def kernel_rms_width(resp: RamanResponse, Omega: float, T: float) -> float:
    """RMS width of ``|W(t)|``, the delta part counted at ``t = 0``."""
    if resp.f_R == 0:
        return 0.0
    sk = SmoothKernel(resp, Omega, T, band=np.pi / (4 * resp.dt), max_lag=10e-12)
    a = np.abs(sk.samples) * resp.f_R
    w = a.sum() * sk.dt + (1 - resp.f_R)
    return float(np.sqrt((sk.t ** 2 * a).sum() * sk.dt / w))


def jta_long_pulse(pump: PumpField, spec: WaveguideSpec, resp: RamanResponse,
                   grid=None, npm: bool = True, check: bool = True) -> JointAmplitude:
    """Long-pulse JTA: pairs created at the collision coordinates.

    The step functions use ``step(0) = 1/2``.  The phase is the reduced form
    with the instantaneous pump power.
    """
    _require_walkoff(spec)
    ax_s, ax_i = _axes(grid, pump)
    if check:
        Tp = np.sqrt(2) * _rms_width(pump)
        width = kernel_rms_width(resp, spec.Omega, spec.T)
        if Tp < 50 * width:
            warnings.warn(f"pump rms duration {Tp:.3e} s is below 50x the kernel width "
                          f"{width:.3e} s", LongPulseWarning, stacklevel=2)
    ts = ax_s.values[:, None]
    ti = ax_i.values[None, :]
    z_c, t_c = collision_coords(ts, ti, spec)
    Ap = FieldInterpolant(pump)
    W0 = complex(W_spectrum(resp, spec.Omega, spec.T, 0.0))
    amp = 1j * np.sqrt(spec.gamma_s * spec.gamma_i) / abs(spec.dbeta) * W0
    box = step(z_c) * step(spec.L - z_c)
    A = amp * Ap(t_c) ** 2 * box
    if npm:
        inst = PowerProfile(pump, build_response(RamanModel.instantaneous()))
        phi = 2 * spec.gamma_p * z_c * inst.C(t_c)
        for g, b, t in ((spec.gamma_s, spec.beta1s, ts), (spec.gamma_i, spec.beta1i, ti)):
            if b == 0:
                phi = phi + 2 * g * (spec.L - z_c) * inst.C(t_c)
            else:
                phi = phi + (2 * g / b) * (inst.G(t) - inst.G(t_c))
        A = A * np.exp(1j * phi)
    return JointAmplitude(A, ax_s, ax_i, TIME, {"kind": "long_pulse"})


class SmoothKernel:
    """Band-limited smooth part of the coupling kernel as a function of lag.

    ``K(d) = (1/2pi) int_{|w| <= band} Khat(w) exp(-i w d) dw`` with
    ``Khat(w) = chi'(O - w) + i [2 n_th + 1] chi''(|O - w|)``, so that
    ``W(w) = 1 - f_R + f_R Khat(w)``.
    """

    def __init__(self, resp: RamanResponse, Omega: float, T: float, band: float,
                 max_lag: float, oversample: int = 8):
        self.band = float(band)
        dt = np.pi / (self.band * oversample)
        n = int(2 ** np.ceil(np.log2(max(8 * max_lag / dt, 64))))
        g = TimeGrid(n, dt)
        w = g.omega
        if resp.f_R > 0:
            Kw = (W_spectrum(resp, Omega, T, w) - (1 - resp.f_R)) / resp.f_R
        else:
            Kw = np.zeros(n, dtype=complex)
        Kw[np.abs(w) > self.band] = 0.0
        self.samples = to_time(Kw, g.dt, g.t0)
        self.t = g.t
        self.dt = dt
        keep = np.abs(self.t) <= 2 * max_lag + 4 * dt
        self.lo, self.hi = self.t[keep][0], self.t[keep][-1]
        self._re = CubicSpline(self.t[keep], self.samples[keep].real)
        self._im = CubicSpline(self.t[keep], self.samples[keep].imag)

    def __call__(self, d) -> np.ndarray:
        d = np.asarray(d, dtype=float)
        if np.any(d < self.lo) or np.any(d > self.hi):
            raise GridMismatchError("lag outside the tabulated kernel range")
        return self._re(d) + 1j * self._im(d)


def lattice_delta(d, span: float, n: int) -> np.ndarray:
    """Band-limited delta matching an ``n``-point grid of period ``span``.

    ``sin((n-1) x) / (2 span sin x)`` with ``x = pi d / (2 span)``; this is the
    lag profile of a diagonal source after the anti-alias mask used by the
    propagator.
    """
    x = np.pi * np.asarray(d, dtype=float) / (2 * span)
    s = np.sin(x)
    small = np.abs(s) < 1e-12
    out = np.empty_like(x)
    out[~small] = np.sin((n - 1) * x[~small]) / (2 * span * s[~small])
    # limit at x = k pi: (n-1) cos((n-1) x) / cos(x)
    out[small] = (n - 1) * np.cos((n - 1) * x[small]) / np.cos(x[small]) / (2 * span)
    return out


@dataclass
class QuadratureReport:
    nodes: int
    rel_change: float
    history: list = field(default_factory=list)


def jta_general_quadrature(pump: PumpField, spec: WaveguideSpec, resp: RamanResponse,
                           grid=None, npm: bool = True, regularization: str = "grid",
                           nodes: int = 129, rtol: float = 1e-6,
                           max_nodes: int = 16385) -> JointAmplitude:
    """JTA from the single z-integral, by composite Simpson with node doubling.

    Parameters
    ----------
    pump : PumpField
        Input pump at z = 0 (no dispersion).
    spec : WaveguideSpec
        Must have no GVD.
    resp : RamanResponse
    grid : TimeGrid or (Axis, Axis), optional
        Output grid; defaults to the pump grid.
    npm : bool
        Include the nonlinear phase.
    regularization : {"grid", "split-step"}
        How the delta part of the kernel is represented.  ``"grid"`` integrates
        it exactly over z (hard box, ``step(0) = 1/2``) and band-limits the
        smooth part to the grid Nyquist frequency.  ``"split-step"`` uses the
        lattice delta and the band limit produced by the propagator's anti-alias
        mask, so the two methods share one discretization.
    nodes : int
        Initial Simpson node count (odd).
    rtol : float
        Relative L2 change between successive doublings.

    Raises
    ------
    QuadratureError
        If ``max_nodes`` is reached before convergence.
    """
    if pump.has_dispersion or spec.has_gvd:
        raise ValidationError("quadrature JTA assumes no group-velocity dispersion")
    if nodes < 3 or nodes % 2 == 0:
        raise ValidationError("nodes must be odd and >= 3")
    ax_s, ax_i = _axes(grid, pump)
    ts = ax_s.values
    ti = ax_i.values
    L = spec.L
    f_R = resp.f_R
    pref = 1j * np.sqrt(spec.gamma_s * spec.gamma_i)
    Ap = FieldInterpolant(pump)
    profile = PowerProfile(pump, resp)

    if regularization == "split-step":
        if not (ax_s == ax_i and isinstance(grid, TimeGrid) or grid is None):
            raise GridMismatchError("split-step regularization needs the square pump grid")
        n = ax_s.n
        span = n * ax_s.step
        band = (n - 1) * np.pi / (2 * span)
        lattice = True
    elif regularization == "grid":
        band = np.pi / max(ax_s.step, ax_i.step)
        lattice = False
        if f_R < 1:
            _require_walkoff(spec)
    else:
        raise ValidationError(f"unknown regularization {regularization!r}")

    max_lag = (ts.max() - ti.min()) + abs(spec.dbeta) * L
    max_lag = max(max_lag, (ti.max() - ts.min()) + abs(spec.dbeta) * L)
    K = SmoothKernel(resp, spec.Omega, spec.T, band, max_lag) if f_R > 0 else None

    toeplitz = ax_s.step == ax_i.step and ax_s.n == ax_i.n
    if toeplitz:
        # lags t_s - t_i and sums t_s + t_i on a shared lattice
        k = np.arange(ax_s.n)
        idx_d = k[:, None] - k[None, :] + (ax_s.n - 1)
        idx_c = k[:, None] + k[None, :]
        dvals = (ax_s.origin - ax_i.origin) + (np.arange(2 * ax_s.n - 1) - (ax_s.n - 1)) * ax_s.step
        cvals = (ax_s.origin + ax_i.origin) + np.arange(2 * ax_s.n - 1) * ax_s.step

    def integrand(z):
        tau_s = ts - spec.beta1s * (L - z)
        tau_i = ti - spec.beta1i * (L - z)
        if npm:
            phase = np.exp(1j * phase_Phi(pump, spec, resp, z, ts[:, None], ti[None, :], profile))
        else:
            phase = 1.0
        out = 0.0
        shift = spec.dbeta * (L - z)
        if K is not None:
            if toeplitz:
                Kd = K(dvals - shift)[idx_d]
            else:
                Kd = K(ts[:, None] - ti[None, :] - shift)
            out = f_R * Kd * np.outer(Ap(tau_s), Ap(tau_i))
        if lattice and f_R < 1:
            csh = (spec.beta1s + spec.beta1i) * (L - z)
            if toeplitz:
                D = lattice_delta(dvals - shift, span, n)[idx_d]
                tc = 0.5 * (cvals - csh)
                Ac = (Ap(tc) ** 2)[idx_c]
            else:
                D = lattice_delta(ts[:, None] - ti[None, :] - shift, span, n)
                Ac = Ap(0.5 * (ts[:, None] + ti[None, :] - csh)) ** 2
            delta = (1 - f_R) * D * Ac
            if npm:
                # the delta part is created at the common time tau_c
                p = replace(pump, gamma_p=spec.gamma_p)
                if toeplitz:
                    th_c = spm_phase(p, resp, z, tc, profile)[idx_c]
                else:
                    th_c = spm_phase(p, resp, z, 0.5 * (ts[:, None] + ti[None, :] - csh), profile)
                corr = (2 * th_c
                        - spm_phase(p, resp, z, tau_s[:, None], profile)
                        - spm_phase(p, resp, z, tau_i[None, :], profile))
                delta = delta * np.exp(1j * corr)
            out = out + delta
        return out * phase

    shape = (ax_s.n, ax_i.n)
    total = np.zeros(shape, dtype=complex)
    if K is not None or lattice:
        # composite Simpson via Richardson on trapezoid sums with node reuse
        m = nodes - 1
        hz = L / m
        zs = np.linspace(0.0, L, nodes)
        fv = [integrand(z) for z in zs]
        T_fine = hz * (sum(fv[1:-1]) + 0.5 * (fv[0] + fv[-1]))
        T_coarse = 2 * hz * (sum(fv[2:-1:2]) + 0.5 * (fv[0] + fv[-1]))
        del fv
        S = (4 * T_fine - T_coarse) / 3
        history = []
        while True:
            mids = (np.arange(m) + 0.5) * hz
            acc = np.zeros(shape, dtype=complex)
            for z in mids:
                acc += integrand(z)
            T_new = 0.5 * T_fine + 0.5 * hz * acc
            S_new = (4 * T_new - T_fine) / 3
            norm = np.linalg.norm(S_new)
            rel = np.linalg.norm(S_new - S) / norm if norm > 0 else 0.0
            history.append((2 * m + 1, rel))
            m, hz, T_fine, S = 2 * m, hz / 2, T_new, S_new
            if rel < rtol:
                break
            if m + 1 >= max_nodes:
                raise QuadratureError(
                    f"z quadrature not converged at {m + 1} nodes (rel change {rel:.2e})")
        total += pref * S
        report = QuadratureReport(m + 1, history[-1][1], history)
    else:
        report = QuadratureReport(0, 0.0, [])

    if not lattice and f_R < 1:
        tsg = ts[:, None]
        tig = ti[None, :]
        z_c, t_c = collision_coords(tsg, tig, spec)
        box = step(z_c) * step(L - z_c)
        delta = (1 - f_R) / abs(spec.dbeta) * Ap(t_c) ** 2 * box
        if npm:
            zc = np.clip(z_c, 0.0, L)
            delta = delta * np.exp(1j * phase_Phi(pump, spec, resp, zc, tsg, tig, profile))
        total += pref * delta

    return JointAmplitude(total, ax_s, ax_i, TIME,
                          {"kind": "quadrature", "nodes": report.nodes,
                           "rel_change": report.rel_change})
