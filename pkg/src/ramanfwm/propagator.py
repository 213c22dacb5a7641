"""Symmetric split-step propagation of the joint temporal amplitude.

The JTA obeys ``dA/dz = (Lin + NL) A + g(z)`` with a linear dispersion
operator, a pointwise XPM phase and the pair-creation source
``g(z) = i sqrt(gs gi) W(t_s - t_i) A_p(z, t_s) A_p(z, t_i)``.  One step is

    A <- exp(Lin h/2) exp(NL h) exp(Lin h/2) [A + (h/2) g(z)] + (h/2) g(z + h)

and consecutive half steps are fused, so a step costs three 2-D FFTs.  Inside
the loop the state lives in the unshifted FFT layout; ``ifft2`` plays the role
of the forward ``exp(+iwt)`` transform, up to a fixed phase that commutes with
every operator used here.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace

import numpy as np
import scipy.fft as sfft

from . import grid as _grid
from .analytic import WaveguideSpec
from .errors import AliasingError, GridMismatchError, StepRejectedError, ValidationError
from .grid import TIME, JointAmplitude, TimeGrid
from .pump import (MAX_STEP_PHASE, PumpField, convolved_power, dispersion_phase,
                   evolve_pump_step)
from .response import RamanModel, RamanResponse, build_response, coupling_W, CouplingKernel

log = logging.getLogger(__name__)

SYMMETRIC = "symmetric"
NAIVE = "naive"


@dataclass(frozen=True)
class StepPlan:
    """Step size and ordering.

    ``steps`` full steps of size ``L / steps``.  ``ordering`` is ``"symmetric"``
    (half SpS and half linear at the ends, fused halves inside) or ``"naive"``
    (full SpS, full linear, full nonlinear from the left end point; first
    order, kept as a regression baseline).
    """

    L: float
    steps: int = 256
    ordering: str = SYMMETRIC
    raman_in_sps: bool = True
    raman_in_xpm: bool = True
    gvd: bool = True
    npm: bool = True
    antialias: bool = True
    alias_tol: float = 1e-6
    checkpoints: tuple = ()

    def __post_init__(self):
        if not self.L > 0 or int(self.steps) < 1:
            raise ValidationError("plan needs L > 0 and steps >= 1")
        if self.ordering not in (SYMMETRIC, NAIVE):
            raise ValidationError(f"unknown ordering {self.ordering!r}")
        object.__setattr__(self, "steps", int(self.steps))

    @property
    def h(self) -> float:
        return self.L / self.steps

    @property
    def z(self) -> np.ndarray:
        return np.arange(self.steps + 1) * self.h

    def describe(self):
        """Ordering as (initial, repeated, final) operator lists."""
        if self.ordering == NAIVE:
            return ([], ["sps(z)", "linear(h)", "nonlinear(z)"], [])
        return (["sps_half(0)", "linear(h/2)"],
                ["nonlinear(z-h,z)", "linear(h/2)", "sps(z)", "linear(h/2)"],
                ["nonlinear(L-h,L)", "linear(h/2)", "sps_half(L)"])


@dataclass
class Diagnostics:
    probability: list = field(default_factory=list)
    edge_fraction: float = 0.0
    max_step_phase: float = 0.0
    steps: int = 0


@dataclass
class PropagationResult:
    jta: JointAmplitude
    pump: PumpField
    plan: StepPlan
    diagnostics: Diagnostics
    checkpoints: dict = field(default_factory=dict)

    def jsa(self) -> JointAmplitude:
        return to_jsa(self.jta)


def to_jsa(A: JointAmplitude, workers=None) -> JointAmplitude:
    """Forward 2-D transform with ``exp(+i(ws ts + wi ti))``."""
    return _grid.to_jsa(A, workers)


def to_jta(A: JointAmplitude, workers=None) -> JointAmplitude:
    """Inverse of :func:`to_jsa`."""
    return _grid.to_jta(A, workers)


def antialias_mask(n: int) -> np.ndarray:
    """Diamond mask in unshifted FFT layout.

    Keeps ``|k_s + k_i| <= n/2`` and ``|k_s - k_i| <= n/2 - 1`` so that the
    diagonal pair source, and its products with band-limited pump fields, are
    not folded back across the Nyquist boundary.
    """
    k = np.fft.fftfreq(n, 1.0 / n).astype(int)
    ks, ki = k[:, None], k[None, :]
    return (np.abs(ks + ki) <= n // 2) & (np.abs(ks - ki) <= n // 2 - 1)


def kernel_grid(grid: TimeGrid, min_span: float = 16e-12) -> TimeGrid:
    """Auxiliary grid for the time-domain kernel: same spacing, longer window."""
    n = max(4 * grid.n, int(2 ** np.ceil(np.log2(min_span / grid.dt))))
    return TimeGrid(min(n, 1 << 20), grid.dt)


def lag_matrix(kernel: CouplingKernel, n: int) -> np.ndarray:
    """``W(t_a - t_b)`` for an ``n``-point grid with the kernel's spacing.

    A kernel tabulated on exactly ``n`` points is treated as periodic.
    """
    k = np.arange(n)
    lag = k[:, None] - k[None, :]
    if kernel.grid.n == n:
        return kernel.kernel[(lag + n // 2) % n]
    vals = kernel.lags(n - 1)
    return vals[lag + (n - 1)]


def sps_source(kernel_matrix, A_s, A_i, gamma_s, gamma_i) -> np.ndarray:
    """Time-domain pair source ``i sqrt(gs gi) W(t_s - t_i) A_p(t_s) A_p(t_i)``."""
    return 1j * np.sqrt(gamma_s * gamma_i) * kernel_matrix * np.outer(A_s, A_i)


def sps_source_frequency(kernel: CouplingKernel, pump_A, gamma_s, gamma_i) -> np.ndarray:
    """Same source built in the frequency domain (returns the time-domain array).

    ``g(ws, wi) = (i sqrt(gs gi) / 2pi) sum_k W(w_k) A(ws - w_k) A(wi + w_k) dw``
    with periodic indexing; O(n^3) and meant for cross-checks.
    """
    g = kernel.grid
    n = g.n
    Aw = _grid.to_frequency(pump_A, g.dt, g.t0)
    W = kernel.W
    m = n // 2
    out = np.zeros((n, n), dtype=complex)
    idx = np.arange(n)
    # ascending layout: physical index j <-> (j - m) dw
    for kk in range(n):
        ka = (idx - (kk - m)) % n
        kb = (idx + (kk - m)) % n
        out += W[kk] * np.outer(Aw[ka], Aw[kb])
    out *= 1j * np.sqrt(gamma_s * gamma_i) * g.domega / (2 * np.pi)
    x = _grid.to_time(out, g.dt, g.t0, axis=0)
    return _grid.to_time(x, g.dt, g.t0, axis=1)


def linear_phase(spec: WaveguideSpec, grid: TimeGrid, gvd: bool = True):
    """Per-axis dispersion phases per unit length on the unshifted FFT frequencies."""
    w = 2 * np.pi * sfft.fftfreq(grid.n, grid.dt)
    ps = spec.beta1s * w
    pi_ = spec.beta1i * w
    if gvd:
        ps = ps + dispersion_phase(spec.betas_s, w)
        pi_ = pi_ + dispersion_phase(spec.betas_i, w)
    return ps, pi_


def linear_step(A: JointAmplitude, spec: WaveguideSpec, h: float, gvd: bool = True) -> JointAmplitude:
    """Exact dispersion over ``h``: multiply the JSA by ``exp(i (D_s + D_i) h)``."""
    if A.signal != A.idler:
        raise GridMismatchError("linear step needs a square grid")
    g = TimeGrid(A.signal.n, A.signal.step) if A.domain == TIME else None
    if A.domain == TIME:
        ps, pi_ = linear_phase(spec, g, gvd)
        X = sfft.ifft2(A.data)
        X *= np.exp(1j * ps * h)[:, None] * np.exp(1j * pi_ * h)[None, :]
        return A.with_data(sfft.fft2(X))
    ws, wi = A.coords()
    ps = spec.beta1s * ws + (dispersion_phase(spec.betas_s, ws) if gvd else 0)
    pi_ = spec.beta1i * wi + (dispersion_phase(spec.betas_i, wi) if gvd else 0)
    return A.with_data(A.data * np.exp(1j * ps * h)[:, None] * np.exp(1j * pi_ * h)[None, :])


def xpm_rates(pump: PumpField, resp: RamanResponse, spec: WaveguideSpec):
    """``(gamma_s C(t), gamma_i C(t))`` for the current pump."""
    C = convolved_power(pump, resp)
    return spec.gamma_s * C, spec.gamma_i * C


def nonlinear_step(A: JointAmplitude, pump_a: PumpField, pump_b: PumpField,
                   resp: RamanResponse, spec: WaveguideSpec, h: float) -> JointAmplitude:
    """XPM over ``h`` with the trapezoid rule on the pump at both ends.

    Phase ``h (gs C_a(ts) + gi C_a(ti) + gs C_b(ts) + gi C_b(ti))``; this equals
    ``2 gamma_j h`` times the end-point average, the XPM factor 2 included.
    """
    if A.domain != TIME:
        raise ValidationError("nonlinear step acts in the time domain")
    sa, ia = xpm_rates(pump_a, resp, spec)
    sb, ib = xpm_rates(pump_b, resp, spec)
    phs = h * (sa + sb)
    phi = h * (ia + ib)
    if np.max(np.abs(phs)) + np.max(np.abs(phi)) > MAX_STEP_PHASE:
        raise StepRejectedError("XPM phase per step exceeds the budget")
    return A.with_data(A.data * np.exp(1j * phs)[:, None] * np.exp(1j * phi)[None, :])


def sps_step(A: JointAmplitude, pump_a: PumpField, pump_b: PumpField | None,
             kernel: CouplingKernel, spec: WaveguideSpec, h: float,
             half: bool = False, domain: str = TIME) -> JointAmplitude:
    """Add the trapezoid-weighted pair source over ``h``.

    Full step: ``(h/2)(g(z) + g(z+h))``.  Half step: ``(h/2) g(z)`` from
    ``pump_a`` alone.  ``domain="freq"`` builds the source by the frequency
    domain convolution instead.
    """
    if A.domain != TIME:
        raise ValidationError("sps_step acts on a time-domain amplitude")
    if not half and pump_b is None:
        raise ValidationError("full SpS step needs the pump at z + h")
    n = A.signal.n

    def src(p):
        if domain == TIME:
            return sps_source(lag_matrix(kernel, n), p.A, p.A, spec.gamma_s, spec.gamma_i)
        return sps_source_frequency(kernel, p.A, spec.gamma_s, spec.gamma_i)

    add = 0.5 * h * src(pump_a)
    if not half:
        add = add + 0.5 * h * src(pump_b)
    return A.with_data(A.data + add)


def edge_fraction(X: np.ndarray, frac: float = 0.9) -> float:
    """Share of ``sum |X|^2`` at ``|w| > frac * Nyquist`` on either axis (FFT layout)."""
    n = X.shape[0]
    k = np.abs(np.fft.fftfreq(n, 1.0 / n))
    edge = k > frac * n / 2
    p = np.abs(X) ** 2
    tot = p.sum()
    if tot == 0:
        return 0.0
    sel = edge[:, None] | edge[None, :]
    return float(p[sel].sum() / tot)


def make_kernel(resp: RamanResponse, spec: WaveguideSpec, grid: TimeGrid,
                raman: bool = True) -> CouplingKernel:
    if not raman or resp.f_R == 0:
        resp = build_response(RamanModel.instantaneous())
    return coupling_W(resp, spec.Omega, spec.T, kernel_grid(grid))


def propagate(pump: PumpField, spec: WaveguideSpec, resp: RamanResponse,
              grid: TimeGrid | None = None, plan: StepPlan | None = None,
              kernel: CouplingKernel | None = None, workers=None) -> PropagationResult:
    """Propagate the JTA from vacuum at z = 0 to z = L.

    Raises
    ------
    StepRejectedError
        If a pump or XPM step exceeds 0.5 rad.
    AliasingError
        If more than ``plan.alias_tol`` of the final spectral weight sits within
        10% of the Nyquist frequency.
    """
    grid = grid or pump.grid
    if grid != pump.grid:
        raise GridMismatchError("pump and JTA grids differ")
    plan = plan or StepPlan(spec.L)
    if abs(plan.L - spec.L) > 1e-12 * spec.L:
        raise ValidationError("plan length differs from waveguide length")
    n = grid.n
    h = plan.h
    M = plan.steps
    kernel = kernel or make_kernel(resp, spec, grid, plan.raman_in_sps)
    Kmat = lag_matrix(kernel, n)
    nl_resp = resp if plan.raman_in_xpm else build_response(RamanModel.instantaneous())
    gp = spec.gamma_p if plan.npm else 0.0
    pump = replace(pump, gamma_p=gp, z=0.0,
                   betas=pump.betas if plan.gvd else ())
    mask = antialias_mask(n) if plan.antialias else None
    ps, pi_ = linear_phase(spec, grid, plan.gvd)
    Lh = np.exp(0.5j * h * ps)[:, None] * np.exp(0.5j * h * pi_)[None, :]
    Lf = Lh * Lh
    pref = 1j * np.sqrt(spec.gamma_s * spec.gamma_i)
    diag = Diagnostics()
    cks = {}
    dtt = grid.dt ** 2

    def source_f(p: PumpField):
        S = sfft.ifft2(pref * Kmat * np.outer(p.A, p.A), workers=workers)
        if mask is not None:
            S *= mask
        return S

    def phase_vec(pa: PumpField, pb: PumpField | None):
        if not plan.npm or (spec.gamma_s == 0 and spec.gamma_i == 0):
            return None
        Ca = convolved_power(pa, nl_resp)
        Cb = convolved_power(pb, nl_resp) if pb is not None else Ca
        phs = h * spec.gamma_s * (Ca + Cb)
        phi = h * spec.gamma_i * (Ca + Cb)
        mx = float(np.max(np.abs(phs)) + np.max(np.abs(phi)))
        diag.max_step_phase = max(diag.max_step_phase, mx)
        if mx > MAX_STEP_PHASE:
            raise StepRejectedError(f"XPM phase {mx:.3f} rad per step exceeds {MAX_STEP_PHASE}")
        return np.exp(1j * phs)[:, None] * np.exp(1j * phi)[None, :]

    def advance(p):
        return evolve_pump_step(p, nl_resp, h) if (p.gamma_p or p.has_dispersion) \
            else p.with_field(p.A, z=p.z + h)

    p0 = pump
    p1 = advance(p0)
    if plan.ordering == NAIVE:
        X = np.zeros((n, n), dtype=complex)
        for k in range(M):
            X = X + h * source_f(p0)
            X = X * Lf
            At = sfft.fft2(X, workers=workers)
            ph = phase_vec(p0, None)
            if ph is not None:
                At *= ph
            diag.probability.append(float(np.sum(np.abs(At) ** 2) * dtt))
            X = sfft.ifft2(At, workers=workers)
            if k + 1 < M:
                p0, p1 = p1, advance(p1)
            else:
                p0 = p1
        final_pump = p0
    else:
        X = 0.5 * h * source_f(p0) * Lh
        for k in range(1, M + 1):
            At = sfft.fft2(X, workers=workers)
            ph = phase_vec(p0, p1)
            if ph is not None:
                At *= ph
            diag.probability.append(float(np.sum(np.abs(At) ** 2) * dtt))
            X = sfft.ifft2(At, workers=workers)
            g1 = source_f(p1)
            if k < M:
                X = X * Lf + h * g1 * Lh
                if k in plan.checkpoints:
                    # undo the half step past z_k and the half source owed to the next step
                    Xk = X / Lh - 0.5 * h * g1
                    cks[k * h] = JointAmplitude.on_grid(sfft.fft2(Xk), grid, TIME)
                p0, p1 = p1, advance(p1)
            else:
                X = X * Lh + 0.5 * h * g1
                p0 = p1
        final_pump = p0
    diag.steps = M
    diag.edge_fraction = edge_fraction(X)
    A = sfft.fft2(X, workers=workers)
    if diag.edge_fraction > plan.alias_tol:
        raise AliasingError(
            f"{diag.edge_fraction:.2e} of the spectral weight is near the grid edge")
    jta = JointAmplitude.on_grid(A, grid, TIME, {"steps": M, "h": h, "ordering": plan.ordering})
    return PropagationResult(jta, final_pump, plan, diag, cks)
