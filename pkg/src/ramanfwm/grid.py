"""Uniform grids and the Fourier convention used throughout the package.

The forward transform is ``F(w) = int f(t) exp(+i w t) dt`` and the inverse is
``f(t) = (1/2pi) int F(w) exp(-i w t) dw``.  On a grid with ``n`` samples the
time axis is ``t_j = t0 + j*dt`` and the angular-frequency axis is stored in
ascending order ``w_k = (k - n//2) * dw`` with ``dw = 2pi / (n*dt)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.fft as sfft

from .errors import ValidationError

TIME = "time"
FREQ = "freq"


def _is_pow2(n: int) -> bool:
    return n > 0 and (n & (n - 1)) == 0


@dataclass(frozen=True)
class Axis:
    """One uniform axis: ``n`` samples, spacing ``step`` and first-sample ``origin``."""

    n: int
    step: float
    origin: float

    @property
    def values(self) -> np.ndarray:
        return self.origin + self.step * np.arange(self.n)


@dataclass(frozen=True)
class TimeGrid:
    """Centred uniform time grid ``t_j = (j - n//2) dt``.

    Parameters
    ----------
    n : int
        Number of samples (power of two).
    dt : float
        Sample spacing in seconds.
    """

    n: int
    dt: float

    def __post_init__(self):
        if not _is_pow2(int(self.n)) or self.n < 4:
            raise ValidationError(f"grid size must be a power of two >= 4, got {self.n}")
        if not self.dt > 0:
            raise ValidationError("dt must be positive")

    @classmethod
    def from_span(cls, span: float, n: int) -> "TimeGrid":
        return cls(int(n), float(span) / int(n))

    @property
    def span(self) -> float:
        return self.n * self.dt

    @property
    def t0(self) -> float:
        return -(self.n // 2) * self.dt

    @property
    def t(self) -> np.ndarray:
        return (np.arange(self.n) - self.n // 2) * self.dt

    @property
    def domega(self) -> float:
        return 2 * np.pi / (self.n * self.dt)

    @property
    def omega(self) -> np.ndarray:
        return (np.arange(self.n) - self.n // 2) * self.domega

    @property
    def nyquist(self) -> float:
        return np.pi / self.dt

    @property
    def time_axis(self) -> Axis:
        return Axis(self.n, self.dt, self.t0)

    @property
    def freq_axis(self) -> Axis:
        return Axis(self.n, self.domega, -(self.n // 2) * self.domega)


def to_frequency(x, dt: float, t0: float, axis: int = -1, workers=None) -> np.ndarray:
    """Forward transform of samples on ``t0 + j*dt`` onto the ascending frequency axis.

    Returns ``X_k = dt * sum_j x_j exp(+i w_k t_j)``.
    """
    x = np.asarray(x, dtype=complex)
    n = x.shape[axis]
    m = n // 2
    shape = [1] * x.ndim
    shape[axis] = n
    j = np.arange(n).reshape(shape)
    w = ((np.arange(n) - m) * (2 * np.pi / (n * dt))).reshape(shape)
    y = sfft.ifft(x * np.exp(-2j * np.pi * m * j / n), axis=axis, workers=workers)
    return y * (n * dt) * np.exp(1j * w * t0)


def to_time(X, dt: float, t0: float, axis: int = -1, workers=None) -> np.ndarray:
    """Inverse of :func:`to_frequency`, ``x_j = (dw/2pi) sum_k X_k exp(-i w_k t_j)``."""
    X = np.asarray(X, dtype=complex)
    n = X.shape[axis]
    m = n // 2
    shape = [1] * X.ndim
    shape[axis] = n
    j = np.arange(n).reshape(shape)
    w = ((np.arange(n) - m) * (2 * np.pi / (n * dt))).reshape(shape)
    y = sfft.fft(X * np.exp(-1j * w * t0), axis=axis, workers=workers)
    return y * np.exp(2j * np.pi * m * j / n) / (n * dt)


@dataclass(frozen=True, eq=False)
class JointAmplitude:
    """Complex two-photon amplitude on a uniform ``(signal, idler)`` grid.

    ``data[a, b]`` is the value at signal coordinate ``axes[0].values[a]`` and
    idler coordinate ``axes[1].values[b]``.  In the time domain the units are
    1/s so that ``sum |A|^2 dt_s dt_i`` is the pair probability.
    """

    data: np.ndarray
    signal: Axis
    idler: Axis
    domain: str = TIME
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.domain not in (TIME, FREQ):
            raise ValidationError(f"unknown domain {self.domain!r}")
        if self.data.shape != (self.signal.n, self.idler.n):
            raise ValidationError("data shape does not match axes")

    @classmethod
    def on_grid(cls, data, grid: TimeGrid, domain: str = TIME, meta=None):
        ax = grid.time_axis if domain == TIME else grid.freq_axis
        return cls(np.asarray(data, dtype=complex), ax, ax, domain, dict(meta or {}))

    @property
    def shape(self):
        return self.data.shape

    def coords(self):
        return self.signal.values, self.idler.values

    def probability(self) -> float:
        w = self.signal.step * self.idler.step
        if self.domain == FREQ:
            w /= (2 * np.pi) ** 2
        return float(np.sum(np.abs(self.data) ** 2) * w)

    def with_data(self, data, domain=None, signal=None, idler=None) -> "JointAmplitude":
        return JointAmplitude(
            np.asarray(data, dtype=complex),
            signal or self.signal,
            idler or self.idler,
            domain or self.domain,
            dict(self.meta),
        )


def _freq_axis_for(ax: Axis) -> Axis:
    dw = 2 * np.pi / (ax.n * ax.step)
    return Axis(ax.n, dw, -(ax.n // 2) * dw)


def _time_axis_for(ax: Axis, t0: float) -> Axis:
    return Axis(ax.n, 2 * np.pi / (ax.n * ax.step), t0)


def to_jsa(A: JointAmplitude, workers=None) -> JointAmplitude:
    """2D forward transform ``A(ws, wi) = int A(ts, ti) exp(+i(ws ts + wi ti))``.

    The time origins are kept in ``meta`` so that :func:`to_jta` can restore them.
    """
    if A.domain != TIME:
        raise ValidationError("to_jsa expects a time-domain amplitude")
    X = to_frequency(A.data, A.signal.step, A.signal.origin, axis=0, workers=workers)
    X = to_frequency(X, A.idler.step, A.idler.origin, axis=1, workers=workers)
    meta = dict(A.meta)
    meta["t0_signal"] = A.signal.origin
    meta["t0_idler"] = A.idler.origin
    return JointAmplitude(X, _freq_axis_for(A.signal), _freq_axis_for(A.idler), FREQ, meta)


def to_jta(A: JointAmplitude, workers=None) -> JointAmplitude:
    """Inverse of :func:`to_jsa` (carries the ``1/(2pi)^2`` factor)."""
    if A.domain != FREQ:
        raise ValidationError("to_jta expects a frequency-domain amplitude")
    ns, ni = A.shape
    ts = _time_axis_for(A.signal, A.meta.get("t0_signal", -(ns // 2) * 2 * np.pi / (ns * A.signal.step)))
    ti = _time_axis_for(A.idler, A.meta.get("t0_idler", -(ni // 2) * 2 * np.pi / (ni * A.idler.step)))
    x = to_time(A.data, ts.step, ts.origin, axis=0, workers=workers)
    x = to_time(x, ti.step, ti.origin, axis=1, workers=workers)
    meta = {k: v for k, v in A.meta.items() if k not in ("t0_signal", "t0_idler")}
    return JointAmplitude(x, ts, ti, TIME, meta)
