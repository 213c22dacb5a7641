"""Classical pump envelope: SPM/XPM phases and a split-step evolver.

All quantities are in the pump frame (pump group slowness is zero).
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from math import factorial

import numpy as np
import scipy.fft as sfft
from scipy.interpolate import CubicSpline

from .errors import GridMismatchError, StepRejectedError, ValidationError
from .grid import TimeGrid, to_frequency
from .response import RamanResponse

MAX_STEP_PHASE = 0.5  # rad


@dataclass(frozen=True, eq=False)
class PumpField:
    """Pump envelope ``A_p(z, t)`` in sqrt(W) on a centred :class:`TimeGrid`.

    Parameters
    ----------
    grid : TimeGrid
    A : ndarray
        Complex samples on ``grid.t``.
    z : float
        Current position in m.
    gamma_p : float
        Pump nonlinear coefficient, 1/(W m).
    betas : tuple of float
        Pump dispersion ``(beta_2, beta_3, ...)`` in s^n/m.
    """

    grid: TimeGrid
    A: np.ndarray
    z: float = 0.0
    gamma_p: float = 0.0
    betas: tuple = ()

    def __post_init__(self):
        a = np.asarray(self.A, dtype=complex)
        if a.shape != (self.grid.n,):
            raise ValidationError("pump samples do not match grid")
        a.setflags(write=False)
        object.__setattr__(self, "A", a)
        object.__setattr__(self, "betas", tuple(float(b) for b in self.betas))

    @property
    def t(self):
        return self.grid.t

    @property
    def power(self) -> np.ndarray:
        return np.abs(self.A) ** 2

    @property
    def energy(self) -> float:
        return float(np.sum(self.power) * self.grid.dt)

    @property
    def spectrum(self) -> np.ndarray:
        """Spectral twin on ``grid.omega`` (forward ``exp(+iwt)`` transform)."""
        return to_frequency(self.A, self.grid.dt, self.grid.t0)

    @property
    def has_dispersion(self) -> bool:
        return any(b != 0 for b in self.betas)

    def with_field(self, A, z=None) -> "PumpField":
        return replace(self, A=A, z=self.z if z is None else z)


def gaussian_pump(P_p: float, T_p: float, grid: TimeGrid, gamma_p: float = 0.0,
                  betas=()) -> PumpField:
    """``A_p(0, t) = sqrt(P_p) exp(-t^2 / (2 T_p^2))``.

    Raises
    ------
    ValidationError
        If the grid does not cover +-8 ``T_p``.
    """
    if P_p < 0 or not T_p > 0:
        raise ValidationError("need P_p >= 0 and T_p > 0")
    t = grid.t
    if grid.span / 2 < 8 * T_p * (1 - 1e-12):
        raise ValidationError(f"grid span {grid.span:.3e} s does not cover +-8 T_p")
    return PumpField(grid, np.sqrt(P_p) * np.exp(-t ** 2 / (2 * T_p ** 2)) + 0j,
                     0.0, gamma_p, betas)


def _padded_length(pump: PumpField, resp: RamanResponse) -> int:
    extra = 0 if resp.is_instantaneous else int(np.ceil(resp.n * resp.dt / pump.grid.dt))
    return int(2 ** np.ceil(np.log2(pump.grid.n + extra + 1)))


def response_filter(resp: RamanResponse, n: int, dt: float) -> np.ndarray:
    """``R(w) = 1 - f_R + f_R chi(w)`` on the unshifted FFT frequencies of length ``n``."""
    key = ("filter", n, dt)
    if key not in resp._cache:
        if resp.is_instantaneous or resp.f_R == 0:
            Rw = np.ones(n, dtype=complex)
        else:
            if dt < resp.dt * (1 - 1e-12):
                raise GridMismatchError("pump grid is finer than the response sampling")
            w = 2 * np.pi * sfft.fftfreq(n, dt)
            w = np.fft.fftshift(w)
            Rw = np.fft.ifftshift(resp.nonlinear_response(w))
        Rw.setflags(write=False)
        resp._cache[key] = Rw
    return resp._cache[key]


def convolved_power(pump: PumpField, resp: RamanResponse) -> np.ndarray:
    """``C(t) = int_0^inf R(t') |A_p(t - t')|^2 dt'`` on the pump grid.

    Computed as a zero-padded product in the frequency domain so that the causal
    tail of the response does not wrap onto the leading edge of the pulse.
    """
    P = pump.power
    if resp.is_instantaneous or resp.f_R == 0:
        return P.copy()
    n = pump.grid.n
    m = _padded_length(pump, resp)
    Rw = response_filter(resp, m, pump.grid.dt)
    # numpy ifft carries exp(+i w t); the filter multiplies in that convention
    Pw = sfft.ifft(P, m)
    return sfft.fft(Pw * Rw)[:n].real


class PowerProfile:
    """Band-limited interpolants of ``C(t)`` and its antiderivative ``G(t)``.

    The samples are upsampled by ``oversample`` with spectral zero padding and
    then fitted by cubic splines.  ``C`` is zero and ``G`` is constant outside the
    grid.
    """

    def __init__(self, pump: PumpField, resp: RamanResponse, oversample: int = 8):
        C = convolved_power(pump, resp)
        self.samples = C
        g = pump.grid
        n = g.n
        m = n * oversample
        spec = np.fft.fftshift(np.fft.fft(C))
        pad = np.zeros(m, dtype=complex)
        pad[m // 2 - n // 2:m // 2 + n // 2] = spec
        fine = np.fft.ifft(np.fft.ifftshift(pad)).real * oversample
        tf = g.t0 + np.arange(m) * (g.dt / oversample)
        self.t_lo, self.t_hi = tf[0], tf[-1]
        self._C = CubicSpline(tf, fine)
        self._G = self._C.antiderivative()
        self.total = float(self._G(self.t_hi))

    def C(self, t) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        inside = (t >= self.t_lo) & (t <= self.t_hi)
        return np.where(inside, self._C(np.clip(t, self.t_lo, self.t_hi)), 0.0)

    def G(self, t) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        return self._G(np.clip(t, self.t_lo, self.t_hi))


def spm_phase(pump: PumpField, resp: RamanResponse, z: float, t=None,
              profile: PowerProfile | None = None) -> np.ndarray:
    """``theta_p(z, t) = gamma_p z C(t)``.

    ``t`` defaults to the pump grid; other times are interpolated.
    """
    if np.any(np.asarray(z) < 0):
        raise ValidationError("z must be >= 0")
    if t is None:
        return pump.gamma_p * z * convolved_power(pump, resp)
    profile = profile or PowerProfile(pump, resp)
    return pump.gamma_p * z * profile.C(t)


def xpm_phase(pump: PumpField, resp: RamanResponse, gamma_j: float, beta_j: float,
              z, t=None, profile: PowerProfile | None = None) -> np.ndarray:
    """``theta_j(z, t) = (2 gamma_j / beta_j) int_{t - beta_j z}^{t} C(t') dt'``.

    For ``beta_j = 0`` the limit ``2 gamma_j z C(t)`` is returned.
    """
    profile = profile or PowerProfile(pump, resp)
    t = pump.t if t is None else np.asarray(t, dtype=float)
    z = np.asarray(z, dtype=float)
    if beta_j == 0:
        return 2 * gamma_j * z * profile.C(t)
    return (2 * gamma_j / beta_j) * (profile.G(t) - profile.G(t - beta_j * z))


def dispersion_phase(betas, omega) -> np.ndarray:
    """``sum_n beta_n w^n / n!`` for ``betas = (beta_2, beta_3, ...)``."""
    out = np.zeros_like(np.asarray(omega, dtype=float))
    for k, b in enumerate(betas):
        if b:
            n = k + 2
            out = out + b * omega ** n / factorial(n)
    return out


def evolve_pump_step(pump: PumpField, resp: RamanResponse, h: float) -> PumpField:
    """One symmetric split step: dispersion h/2, SPM h, dispersion h/2.

    Raises
    ------
    StepRejectedError
        If the SPM phase of the step exceeds 0.5 rad.
    """
    if not h > 0:
        raise ValidationError("step must be positive")
    A = pump.A
    if pump.has_dispersion:
        w = 2 * np.pi * sfft.fftfreq(pump.grid.n, pump.grid.dt)
        half = np.exp(1j * dispersion_phase(pump.betas, w) * h / 2)
        A = sfft.fft(sfft.ifft(A) * half)
    C = convolved_power(pump.with_field(A), resp)
    phi = pump.gamma_p * h * C
    if np.max(np.abs(phi), initial=0.0) > MAX_STEP_PHASE:
        raise StepRejectedError(
            f"pump SPM phase {np.max(np.abs(phi)):.3f} rad per step exceeds {MAX_STEP_PHASE}")
    A = A * np.exp(1j * phi)
    if pump.has_dispersion:
        A = sfft.fft(sfft.ifft(A) * half)
    return pump.with_field(A, z=pump.z + h)


class FieldInterpolant:
    """Band-limited interpolant of the complex pump envelope (zero off-grid)."""

    def __init__(self, pump: PumpField, oversample: int = 8):
        g = pump.grid
        n, m = g.n, g.n * oversample
        spec = np.fft.fftshift(np.fft.fft(pump.A))
        pad = np.zeros(m, dtype=complex)
        pad[m // 2 - n // 2:m // 2 + n // 2] = spec
        fine = np.fft.ifft(np.fft.ifftshift(pad)) * oversample
        tf = g.t0 + np.arange(m) * (g.dt / oversample)
        self.t_lo, self.t_hi = tf[0], tf[-1]
        self._re = CubicSpline(tf, fine.real)
        self._im = CubicSpline(tf, fine.imag)

    def __call__(self, t) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        tc = np.clip(t, self.t_lo, self.t_hi)
        val = self._re(tc) + 1j * self._im(tc)
        return np.where((t >= self.t_lo) & (t <= self.t_hi), val, 0.0)
