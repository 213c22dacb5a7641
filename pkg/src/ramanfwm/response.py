"""Nonlinear response ``R(t) = (1 - f_R) delta(t) + f_R h_R(t)`` and derived kernels.

The Raman susceptibility is ``chi(w) = int h_R(t) exp(+i w t) dt`` and is always
evaluated from the normalized samples of ``h_R``, so the discrete identities
``chi(0) = 1`` and ``chi(-w) = conj(chi(w))`` hold to rounding error.
"""

from __future__ import annotations

import enum
import hashlib
from dataclasses import dataclass, field
from importlib import resources

import numpy as np
from scipy import constants
from scipy.signal import czt

from .errors import GridMismatchError, ValidationError
from .grid import TimeGrid, to_time

HBAR = constants.hbar
KB = constants.k
C_CM = constants.c * 100.0  # cm/s, converts wavenumbers

SILICA_TABLE = "silica_13mode.txt"
SILICA_SHA256 = "18c07ce8c34ea5f38591d76053296c8cf3d32ba81f57cae8ea8760ed83563775"


class RamanKind(enum.Enum):
    INSTANTANEOUS = "instantaneous"
    SINGLE_OSCILLATOR = "single_oscillator"
    MULTI_MODE = "multi_mode"


@dataclass(frozen=True, eq=False)
class ModeTable:
    """Oscillator parameters in rad/s.

    ``h(t) = sum A exp(-lorentzian t) exp(-gaussian^2 t^2 / 4) sin(center t)``.
    """

    center: np.ndarray
    gaussian: np.ndarray
    lorentzian: np.ndarray
    amplitude: np.ndarray

    def __post_init__(self):
        arrs = [np.atleast_1d(np.asarray(a, float)) for a in
                (self.center, self.gaussian, self.lorentzian, self.amplitude)]
        if len({a.shape for a in arrs}) != 1 or arrs[0].ndim != 1 or arrs[0].size == 0:
            raise ValidationError("mode table columns must be equal-length 1-D arrays")
        for name, a in zip(("center", "gaussian", "lorentzian", "amplitude"), arrs):
            if not np.all(np.isfinite(a)):
                raise ValidationError(f"non-finite entry in column {name}")
            object.__setattr__(self, name, a)
        if np.any(self.gaussian < 0) or np.any(self.lorentzian < 0):
            raise ValidationError("negative damping: response would not be normalizable")
        if np.any((self.gaussian == 0) & (self.lorentzian == 0)):
            raise ValidationError("undamped mode: response would not be normalizable")

    def __len__(self):
        return self.center.size


def load_mode_table(path_or_text, units: str | None = None) -> ModeTable:
    """Parse a four-column mode table.

    A ``# units: cm^-1`` comment switches the columns from rad/s to the
    wavenumber convention (center position and FWHM widths); an explicit
    ``units`` argument overrides the file.
    """
    if hasattr(path_or_text, "read_text"):
        text = path_or_text.read_text()
    elif "\n" in str(path_or_text):
        text = str(path_or_text)
    else:
        with open(path_or_text) as fh:
            text = fh.read()
    file_units = "rad/s"
    rows = []
    for line in text.splitlines():
        s = line.strip()
        if not s:
            continue
        if s.startswith("#"):
            body = s[1:].strip()
            if body.lower().startswith("units:"):
                file_units = body.split(":", 1)[1].strip()
            continue
        parts = s.split()
        if len(parts) != 4:
            raise ValidationError(f"expected 4 columns, got {len(parts)}: {line!r}")
        rows.append([float(p) for p in parts])
    if not rows:
        raise ValidationError("empty mode table")
    u = (units or file_units).lower()
    a = np.array(rows)
    if u in ("cm^-1", "cm-1", "1/cm"):
        return ModeTable(2 * np.pi * C_CM * a[:, 0], np.pi * C_CM * a[:, 1],
                         np.pi * C_CM * a[:, 2], a[:, 3])
    if u in ("rad/s", "1/s"):
        return ModeTable(a[:, 0], a[:, 1], a[:, 2], a[:, 3])
    raise ValidationError(f"unknown table units {u!r}")


def silica_table_text() -> str:
    text = resources.files("ramanfwm.data").joinpath(SILICA_TABLE).read_text()
    digest = hashlib.sha256(text.encode()).hexdigest()
    if digest != SILICA_SHA256:
        raise RuntimeError("bundled silica table checksum mismatch")
    return text


def silica_mode_table() -> ModeTable:
    return load_mode_table(silica_table_text())


@dataclass(frozen=True, eq=False)
class RamanModel:
    """Response model: kind, parameters and the Raman fraction ``f_R``."""

    kind: RamanKind
    f_R: float = 0.0
    tau1: float | None = None
    tau2: float | None = None
    modes: ModeTable | None = None

    def __post_init__(self):
        if not 0.0 <= self.f_R <= 1.0:
            raise ValidationError(f"f_R must lie in [0, 1], got {self.f_R}")
        if self.kind is RamanKind.SINGLE_OSCILLATOR:
            if not (self.tau1 and self.tau2 and self.tau1 > 0 and self.tau2 > 0):
                raise ValidationError("single oscillator needs tau1 > 0 and tau2 > 0")
        if self.kind is RamanKind.MULTI_MODE and self.modes is None:
            raise ValidationError("multi-mode model needs a mode table")

    @classmethod
    def instantaneous(cls, f_R: float = 0.0) -> "RamanModel":
        return cls(RamanKind.INSTANTANEOUS, f_R)

    @classmethod
    def single_oscillator(cls, tau1: float, tau2: float, f_R: float) -> "RamanModel":
        return cls(RamanKind.SINGLE_OSCILLATOR, f_R, tau1=tau1, tau2=tau2)

    @classmethod
    def multi_mode(cls, modes: ModeTable, f_R: float) -> "RamanModel":
        return cls(RamanKind.MULTI_MODE, f_R, modes=modes)

    @classmethod
    def silica(cls, f_R: float = 0.18) -> "RamanModel":
        return cls.multi_mode(silica_mode_table(), f_R)

    def fastest_frequency(self) -> float:
        if self.kind is RamanKind.SINGLE_OSCILLATOR:
            return 1.0 / self.tau1
        if self.kind is RamanKind.MULTI_MODE:
            m = self.modes
            return float(np.max(m.center + m.gaussian + m.lorentzian))
        return 0.0

    def slowest_decay(self) -> float:
        """Rough 1/e decay time of the slowest mode."""
        if self.kind is RamanKind.SINGLE_OSCILLATOR:
            return self.tau2
        if self.kind is RamanKind.MULTI_MODE:
            m = self.modes
            # exp(-g t - G^2 t^2/4) = 1/e
            g, G = m.lorentzian, m.gaussian
            t = np.where(G > 0, (-g + np.sqrt(g * g + G * G)) / np.maximum(G * G / 2, 1e-300), 1 / np.maximum(g, 1e-300))
            return float(np.max(t))
        return 0.0

    def sample(self, t) -> np.ndarray:
        """Unnormalized ``h_R(t)``; zero for ``t < 0``."""
        t = np.asarray(t, dtype=float)
        tp = np.clip(t, 0.0, None)
        if self.kind is RamanKind.SINGLE_OSCILLATOR:
            t1, t2 = self.tau1, self.tau2
            h = (t1 ** 2 + t2 ** 2) / (t1 * t2 ** 2) * np.exp(-tp / t2) * np.sin(tp / t1)
        elif self.kind is RamanKind.MULTI_MODE:
            m = self.modes
            h = np.zeros_like(tp)
            for w, G, g, a in zip(m.center, m.gaussian, m.lorentzian, m.amplitude):
                h = h + a * np.exp(-g * tp - 0.25 * (G * tp) ** 2) * np.sin(w * tp)
        else:
            raise ValidationError("instantaneous response has no smooth samples")
        return np.where(t < 0, 0.0, h)


@dataclass(frozen=True)
class ResponseGrid:
    """Causal sampling grid ``t_n = n dt`` for ``n = 0..n-1``."""

    n: int
    dt: float

    def __post_init__(self):
        if self.n < 1 or not self.dt > 0:
            raise ValidationError("response grid needs n >= 1 and dt > 0")

    @classmethod
    def default_for(cls, model: RamanModel, dt: float = 0.25e-15) -> "ResponseGrid":
        if model.kind is RamanKind.INSTANTANEOUS:
            return cls(1, dt)
        span = max(16.0 * model.slowest_decay(), 1e-12)
        return cls(int(np.ceil(span / dt)), dt)


@dataclass(frozen=True, eq=False)
class RamanResponse:
    """Sampled, normalized response.

    Attributes
    ----------
    model : RamanModel
    dt : float
        Sample spacing of ``h``.
    h : ndarray
        ``h_R(n dt)`` in 1/s, normalized so that ``sum(h) * dt == 1``.
    """

    model: RamanModel
    dt: float
    h: np.ndarray
    _cache: dict = field(default_factory=dict, repr=False)

    @property
    def f_R(self) -> float:
        return self.model.f_R

    @property
    def n(self) -> int:
        return self.h.size

    @property
    def t(self) -> np.ndarray:
        return np.arange(self.n) * self.dt

    @property
    def is_instantaneous(self) -> bool:
        return self.model.kind is RamanKind.INSTANTANEOUS

    @property
    def omega(self) -> np.ndarray:
        """Ascending frequency grid matching the response samples."""
        n = self.n
        return (np.arange(n) - n // 2) * (2 * np.pi / (n * self.dt))

    @property
    def chi(self) -> np.ndarray:
        """``chi`` on :attr:`omega` (exact DFT of the samples)."""
        return self.susceptibility(self.omega)

    def susceptibility(self, omega) -> np.ndarray:
        """``chi(w) = dt * sum_n h_n exp(i w n dt)`` at arbitrary ``w``."""
        omega = np.asarray(omega, dtype=float)
        if self.is_instantaneous:
            return np.ones(omega.shape, dtype=complex)
        flat = omega.ravel()
        out = None
        if flat.size >= 16:
            d = np.diff(flat)
            if np.all(np.abs(d - d[0]) <= 1e-9 * max(abs(d[0]), 1e-300)) and d[0] != 0:
                out = self.dt * czt(self.h, flat.size, w=np.exp(1j * d[0] * self.dt),
                                    a=np.exp(-1j * flat[0] * self.dt))
        if out is None:
            out = np.empty(flat.size, dtype=complex)
            t = self.t
            chunk = max(1, 2 ** 22 // max(self.n, 1))
            for s in range(0, flat.size, chunk):
                w = flat[s:s + chunk]
                out[s:s + chunk] = self.dt * (np.exp(1j * np.outer(w, t)) @ self.h)
        return out.reshape(omega.shape)

    def nonlinear_response(self, omega) -> np.ndarray:
        """``R(w) = 1 - f_R + f_R chi(w)``."""
        return 1 - self.f_R + self.f_R * self.susceptibility(omega)

    @property
    def chi2_slope(self) -> float:
        """``d chi''/dw`` at ``w = 0``, i.e. ``sum t h dt``."""
        if self.is_instantaneous:
            return 0.0
        return float(np.sum(self.t * self.h) * self.dt)

    def check_grid(self, grid: TimeGrid) -> None:
        if self.is_instantaneous:
            return
        if grid.dt < self.dt * (1 - 1e-12):
            raise GridMismatchError(
                f"grid spacing {grid.dt:.3e} s is finer than the response sampling {self.dt:.3e} s")


def build_response(model: RamanModel, grid: ResponseGrid | None = None) -> RamanResponse:
    """Sample and normalize ``h_R`` on a causal grid.

    Parameters
    ----------
    model : RamanModel
    grid : ResponseGrid, optional
        Defaults to ``dt = 0.25 fs`` and a window of 16 slowest decay times.

    Raises
    ------
    ValidationError
        If the grid under-resolves the fastest oscillation, truncates the
        response, or the response integrates to zero.
    """
    grid = grid or ResponseGrid.default_for(model)
    if model.kind is RamanKind.INSTANTANEOUS:
        return RamanResponse(model, grid.dt, np.array([1.0 / grid.dt]))
    wmax = model.fastest_frequency()
    if wmax * grid.dt > 2 * np.pi / 8:
        raise ValidationError("dt does not resolve the fastest oscillator (need >= 8 samples per period)")
    h = model.sample(np.arange(grid.n) * grid.dt)
    peak = np.max(np.abs(h))
    tail = np.max(np.abs(h[-max(grid.n // 20, 1):]))
    if not peak > 0 or tail > 1e-9 * peak:
        raise ValidationError("response not contained in the sampling window")
    area = np.sum(h) * grid.dt
    if not abs(area) > 1e-12 * peak * grid.n * grid.dt:
        raise ValidationError("response integrates to zero and cannot be normalized")
    h = h / area
    h.setflags(write=False)
    return RamanResponse(model, grid.dt, h)


def n_th(omega, T: float):
    """Bose-Einstein occupation ``1/(exp(hbar w / k T) - 1)``.

    Raises
    ------
    ValidationError
        If any ``omega <= 0`` or ``T < 0``.
    """
    w = np.asarray(omega, dtype=float)
    if np.any(~(w > 0)):
        raise ValidationError("n_th needs omega > 0; pass |omega|")
    if T < 0:
        raise ValidationError("temperature must be >= 0")
    if T == 0:
        out = np.zeros_like(w)
    else:
        with np.errstate(over="ignore"):
            out = 1.0 / np.expm1(HBAR * w / (KB * T))
    return out if out.ndim else float(out)


def step(x):
    """Unit step with ``step(0) = 1/2``."""
    return np.heaviside(np.asarray(x, dtype=float), 0.5)


def chi2_abs(resp: RamanResponse, omega) -> np.ndarray:
    """``chi''(|w|)`` from a susceptibility evaluated at signed ``w``."""
    omega = np.asarray(omega, dtype=float)
    return np.sign(omega) * resp.susceptibility(omega).imag


LINEAR_CHI2_LIMIT = 1e9  # rad/s; chi'' is linear here to ~1e-7 relative


def thermal_chi2(resp: RamanResponse, omega, T: float) -> np.ndarray:
    """``chi''(|w|) n_th(|w|)``, continued to its finite limit at ``w = 0``."""
    omega = np.asarray(omega, dtype=float)
    a = np.abs(omega)
    out = np.zeros(omega.shape)
    if T <= 0:
        return out
    # near zero the sampled chi'' is rounding noise times a diverging n_th;
    # use chi'' = slope |w| there, where x / expm1(x) is smooth through x = 0
    lin = a < LINEAR_CHI2_LIMIT
    far = ~lin
    out[far] = chi2_abs(resp, omega[far]) * n_th(a[far], T)
    x = HBAR * a[lin] / (KB * T)
    with np.errstate(invalid="ignore"):
        ratio = np.where(x > 0, x / np.expm1(x), 1.0)
    out[lin] = KB * T / HBAR * resp.chi2_slope * ratio
    return out


def W_spectrum(resp: RamanResponse, Omega: float, T: float, omega) -> np.ndarray:
    """``W(w) = 1 - f_R + f_R chi'(O - w) + i f_R [2 n_th + 1] chi''(|O - w|)``."""
    omega = np.asarray(omega, dtype=float)
    if resp.f_R == 0:
        return np.ones(omega.shape, dtype=complex)
    x = Omega - omega
    chi = resp.susceptibility(x)
    c2 = np.sign(x) * chi.imag
    im = 2 * thermal_chi2(resp, x, T) + c2
    return 1 - resp.f_R + resp.f_R * (chi.real + 1j * im)


def F_spectrum(resp: RamanResponse, T: float, omega) -> np.ndarray:
    """Noise correlation ``F(w) = 2 f_R chi''(|w|) [n_th(|w|) + step(w)]``."""
    omega = np.asarray(omega, dtype=float)
    if resp.f_R == 0:
        return np.zeros(omega.shape)
    return 2 * resp.f_R * (thermal_chi2(resp, omega, T) + chi2_abs(resp, omega) * step(omega))


@dataclass(frozen=True, eq=False)
class CouplingKernel:
    """Pair-creation kernel sampled on a centred :class:`TimeGrid`.

    ``W`` lives on ``grid.omega`` and ``kernel`` (the time-domain function) on
    ``grid.t``; they are a discrete transform pair.
    """

    Omega: float
    T: float
    grid: TimeGrid
    W: np.ndarray
    kernel: np.ndarray
    F: np.ndarray
    f_R: float

    @property
    def omega(self):
        return self.grid.omega

    @property
    def t(self):
        return self.grid.t

    def lags(self, m: int) -> np.ndarray:
        """Kernel at lags ``-m..m`` (in units of ``dt``)."""
        c = self.grid.n // 2
        if m > c - 1:
            raise GridMismatchError("kernel grid too short for requested lags")
        return self.kernel[c - m:c + m + 1]


def coupling_W(resp: RamanResponse, Omega: float, T: float, grid: TimeGrid) -> CouplingKernel:
    """Sample ``W``, its time-domain twin and ``F`` on ``grid``.

    The time-domain kernel is ``(1/2pi) int W(w) exp(-i w t) dw`` evaluated as the
    discrete inverse transform, so a constant ``W`` maps to ``delta_{t,0}/dt``.
    """
    resp.check_grid(grid)
    w = grid.omega
    W = W_spectrum(resp, Omega, T, w)
    K = to_time(W, grid.dt, grid.t0)
    F = F_spectrum(resp, T, w)
    for a in (W, K, F):
        a.setflags(write=False)
    return CouplingKernel(float(Omega), float(T), grid, W, K, F, resp.f_R)


def noise_F(resp: RamanResponse, T: float, grid: TimeGrid) -> np.ndarray:
    """``F(w)`` on ``grid.omega``."""
    resp.check_grid(grid)
    return F_spectrum(resp, T, grid.omega)
