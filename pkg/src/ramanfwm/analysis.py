"""Photon statistics in the long-pulse limit and Schmidt decomposition."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import constants

from .analytic import WaveguideSpec, _require_walkoff
from .errors import NumericalError, ValidationError
from .grid import FREQ, JointAmplitude
from .pump import PumpField
from .response import RamanResponse, W_spectrum, chi2_abs, step, thermal_chi2

ROOM_TEMPERATURE = 295.0  # K
PUMP_WAVELENGTH = 1550e-9  # m


def filter_bandwidth(dlam: float, lam: float = PUMP_WAVELENGTH) -> float:
    """Angular-frequency width of a ``dlam`` wide filter at ``lam``."""
    return 2 * np.pi * constants.c * dlam / lam ** 2


def detuning_to_wavelength(nu, lam0: float = PUMP_WAVELENGTH):
    """Wavelength of a field detuned by linear frequency ``nu`` from ``lam0``."""
    return constants.c / (constants.c / lam0 + np.asarray(nu, dtype=float))


@dataclass(frozen=True)
class PairStatistics:
    R_pair: float
    R0: float
    r: float
    R_R_plus: float
    R_R_minus: float
    CAR: float
    C0: float
    dw: float
    E_p: float


def _trap_weights(n: int) -> np.ndarray:
    w = np.ones(n)
    if n > 1:
        w[0] = w[-1] = 0.5
    return w


def pair_probability(A: JointAmplitude) -> float:
    """``int int |A|^2`` with trapezoid weights; frequency domain divides by ``(2 pi)^2``."""
    w = np.outer(_trap_weights(A.signal.n), _trap_weights(A.idler.n))
    p = float(np.sum(w * np.abs(A.data) ** 2) * A.signal.step * A.idler.step)
    if A.domain == FREQ:
        p /= (2 * np.pi) ** 2
    return p


def quartic_integral(pump: PumpField) -> float:
    """``int |A_p(0, t)|^4 dt`` by the trapezoid rule."""
    return float(np.sum(_trap_weights(pump.grid.n) * pump.power ** 2) * pump.grid.dt)


def rate_bracket(resp: RamanResponse, Omega, T: float) -> np.ndarray:
    """``[1 - f_R + f_R chi'(O)]^2 + f_R^2 chi''(O)^2 [2 n_th(O) + 1]^2``.

    This is ``|W(0)|^2``; at ``O = 0`` the thermal factor takes its finite limit.
    """
    Omega = np.asarray(Omega, dtype=float)
    W0 = W_spectrum(resp, 0.0, T, -np.abs(Omega))
    return np.abs(W0) ** 2


def pair_rate_long_pulse(pump: PumpField, spec: WaveguideSpec, resp: RamanResponse) -> float:
    """Pair probability per pulse in the long-pulse limit."""
    _require_walkoff(spec)
    R0 = spec.gamma_s * spec.gamma_i * spec.L * quartic_integral(pump) / abs(spec.dbeta)
    return float(R0 * rate_bracket(resp, spec.Omega, spec.T))


def rate_ratio(resp: RamanResponse, Omegas, Ts) -> np.ndarray:
    """``r(O; T) = R_pair / R_0``, shape ``(len(Ts), len(Omegas))``."""
    Omegas = np.atleast_1d(np.asarray(Omegas, dtype=float))
    return np.array([rate_bracket(resp, Omegas, float(T)) for T in Ts])


def raman_singles_rate(pump: PumpField, spec: WaveguideSpec, resp: RamanResponse, delta,
                       dw: float) -> np.ndarray:
    """Spontaneous Raman photons per pulse in a band ``dw`` at detuning ``delta``.

    ``(1/pi) gamma_s f_R E_p dw L chi''(|d|) [n_th(|d|) + step(-d)]``.
    """
    delta = np.asarray(delta, dtype=float)
    if resp.f_R == 0:
        return np.zeros(delta.shape)
    occ = thermal_chi2(resp, delta, spec.T) + chi2_abs(resp, delta) * step(-delta)
    return spec.gamma_s * resp.f_R * pump.energy * dw * spec.L * occ / np.pi


def C0(pump: PumpField, spec: WaveguideSpec, dw: float) -> float:
    """Unit of the pairs-to-singles ratio."""
    _require_walkoff(spec)
    return float(np.pi * spec.gamma_s * quartic_integral(pump)
                 / (dw * pump.energy * abs(spec.dbeta)))


def pairs_to_singles(pump: PumpField, spec: WaveguideSpec, resp: RamanResponse, deltas,
                     Ts, dw: float, singles_at: str = "delta") -> np.ndarray:
    """``C(d) / C_0 = R_pair(|d|) / R_R(.) / C_0``, shape ``(len(Ts), len(deltas))``.

    ``singles_at="delta"`` evaluates the singles at ``d`` itself;
    ``"signal"`` evaluates them at the signal detuning ``-|d|``.  Points with no
    singles return ``+inf``.
    """
    from dataclasses import replace

    if singles_at not in ("delta", "signal"):
        raise ValidationError("singles_at must be 'delta' or 'signal'")
    deltas = np.atleast_1d(np.asarray(deltas, dtype=float))
    c0 = C0(pump, spec, dw)
    out = []
    for T in Ts:
        sp = replace(spec, T=float(T))
        num = np.array([pair_rate_long_pulse(pump, replace(sp, Omega=abs(d)), resp) for d in deltas])
        where = deltas if singles_at == "delta" else -np.abs(deltas)
        den = raman_singles_rate(pump, sp, resp, where, dw)
        with np.errstate(divide="ignore", invalid="ignore"):
            c = np.where(den > 0, num / np.where(den > 0, den, 1.0) / c0, np.inf)
        out.append(c)
    return np.array(out)


def car(pump: PumpField, spec: WaveguideSpec, resp: RamanResponse, dw: float) -> float:
    """Coincidence-to-accidental ratio, dark counts neglected."""
    R = pair_rate_long_pulse(pump, spec, resp)
    if R <= 0:
        raise ValidationError("CAR needs a positive pair rate")
    Rp = float(raman_singles_rate(pump, spec, resp, spec.Omega, dw))
    Rm = float(raman_singles_rate(pump, spec, resp, -spec.Omega, dw))
    return R / ((R + Rp) * (R + Rm))


def peak_power_for_rate(R_target: float, T_p: float, spec: WaveguideSpec,
                        resp: RamanResponse) -> float:
    """Gaussian peak power giving ``R_pair = R_target`` (closed form)."""
    _require_walkoff(spec)
    B = float(rate_bracket(resp, spec.Omega, spec.T))
    q = spec.gamma_s * spec.gamma_i * spec.L * np.sqrt(np.pi / 2) * T_p * B / abs(spec.dbeta)
    return float(np.sqrt(R_target / q))


def statistics(pump: PumpField, spec: WaveguideSpec, resp: RamanResponse,
               dw: float) -> PairStatistics:
    R = pair_rate_long_pulse(pump, spec, resp)
    B = float(rate_bracket(resp, spec.Omega, spec.T))
    Rp = float(raman_singles_rate(pump, spec, resp, spec.Omega, dw))
    Rm = float(raman_singles_rate(pump, spec, resp, -spec.Omega, dw))
    car_ = R / ((R + Rp) * (R + Rm)) if R > 0 else 0.0
    return PairStatistics(R, R / B if B else 0.0, B, Rp, Rm, car_, C0(pump, spec, dw), dw,
                          pump.energy)


@dataclass(frozen=True, eq=False)
class SchmidtSpectrum:
    """Singular values and modes of a joint amplitude.

    ``A(x, y) = sum_n lam_n f_n(x) g_n(y)`` with ``sum |f_n|^2 dx = 1``.
    """

    lam: np.ndarray
    f: np.ndarray
    g: np.ndarray

    @property
    def purity(self) -> float:
        l2 = self.lam ** 2
        return float(np.sum(l2 ** 2) / np.sum(l2) ** 2)

    @property
    def schmidt_number(self) -> float:
        return 1.0 / self.purity


def schmidt(A: JointAmplitude, modes: int | None = None) -> SchmidtSpectrum:
    """SVD of ``A sqrt(ds di)`` (divided by ``2 pi`` in the frequency domain).

    The first significant entry of each signal mode is made real and positive.
    """
    ds, di = A.signal.step, A.idler.step
    scale = np.sqrt(ds * di)
    if A.domain == FREQ:
        scale /= 2 * np.pi
    M = A.data * scale
    if not np.all(np.isfinite(M)) or not np.any(M):
        raise ValidationError("Schmidt decomposition needs a finite, non-zero amplitude")
    try:
        U, s, Vh = np.linalg.svd(M, full_matrices=False)
    except np.linalg.LinAlgError as exc:  # pragma: no cover
        raise NumericalError(f"SVD failed: {exc}") from exc
    k = s.size if modes is None else min(modes, s.size)
    U, s, Vh = U[:, :k], s[:k], Vh[:k]
    for j in range(k):
        col = U[:, j]
        first = np.flatnonzero(np.abs(col) > 1e-8 * np.abs(col).max())[0]
        ph = col[first] / abs(col[first])
        U[:, j] = col / ph
        Vh[j] = Vh[j] * ph
    return SchmidtSpectrum(s, U / np.sqrt(ds), Vh.T / np.sqrt(di))


def purity(A: JointAmplitude) -> float:
    """Heralded purity from singular values only."""
    scale = np.sqrt(A.signal.step * A.idler.step)
    s = np.linalg.svd(A.data * scale, compute_uv=False)
    l2 = s ** 2
    tot = l2.sum()
    if not tot > 0:
        raise ValidationError("purity of a zero amplitude is undefined")
    return float(np.sum(l2 ** 2) / tot ** 2)
