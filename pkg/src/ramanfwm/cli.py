"""Command line: ``ramanfwm {respond,propagate,sweep,converge,preset}``.

Exit codes are 0 on success, 2 for invalid input and 3 for numerical failure.
"""

from __future__ import annotations

import argparse
import itertools
import json
import logging
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace
from functools import lru_cache
from pathlib import Path

import numpy as np

from . import __version__
from .analysis import (detuning_to_wavelength, filter_bandwidth, pair_rate_long_pulse,
                       pairs_to_singles, peak_power_for_rate, purity, rate_bracket,
                       raman_singles_rate, schmidt)
from .analytic import WaveguideSpec
from .config import RunConfig
from .errors import NumericalError, ValidationError
from .grid import TIME, Axis, JointAmplitude, TimeGrid
from .gridio import write_csv, write_field, write_grid
from .propagator import StepPlan, propagate, to_jsa
from .pump import gaussian_pump
from .response import (RamanModel, ResponseGrid, build_response, coupling_W, load_mode_table)

log = logging.getLogger("ramanfwm")

EXIT_OK, EXIT_VALIDATION, EXIT_NUMERIC = 0, 2, 3


# -- builders -----------------------------------------------------------------

@lru_cache(maxsize=16)
def _response(model: str, f_R: float, tau1: float, tau2: float, table: str, dt: float):
    if f_R == 0 or model == "instantaneous":
        return build_response(RamanModel.instantaneous(f_R))
    if model == "silica":
        m = RamanModel.silica(f_R)
    elif model == "single":
        m = RamanModel.single_oscillator(tau1, tau2, f_R)
    else:
        if not table:
            raise ValidationError("raman.model = table needs raman.table")
        m = RamanModel.multi_mode(load_mode_table(Path(table)), f_R)
    return build_response(m, ResponseGrid.default_for(m, dt))


def build_resp(cfg: RunConfig, f_R: float | None = None):
    f = cfg["raman.f_R"] if f_R is None else f_R
    return _response(cfg["raman.model"], float(f), cfg["raman.tau1"], cfg["raman.tau2"],
                     cfg["raman.table"], cfg["raman.dt"])


def build_grid(cfg: RunConfig, t_p: float | None = None) -> TimeGrid:
    """Grid from config; a sweep over ``t_p`` scales the span with the pulse."""
    span = cfg["grid.span"]
    if t_p is not None:
        span *= t_p / cfg["pump.t_p"]
    return TimeGrid.from_span(span, cfg["grid.n"])


def build_pump(cfg: RunConfig, grid: TimeGrid, t_p: float | None = None, P: float | None = None):
    return gaussian_pump(cfg["pump.P"] if P is None else P,
                         cfg["pump.t_p"] if t_p is None else t_p, grid,
                         cfg["waveguide.gamma_p"], (cfg["pump.beta2"], cfg["pump.beta3"]))


def build_spec(cfg: RunConfig, **kw) -> WaveguideSpec:
    spec = WaveguideSpec(
        cfg["waveguide.gamma_p"], cfg["waveguide.gamma_s"], cfg["waveguide.gamma_i"],
        cfg["waveguide.beta1s"], cfg["waveguide.beta1i"], cfg["waveguide.L"],
        cfg["waveguide.T"], cfg["waveguide.Omega"],
        (cfg["waveguide.beta2s"], cfg["waveguide.beta3s"]),
        (cfg["waveguide.beta2i"], cfg["waveguide.beta3i"]))
    return replace(spec, **kw) if kw else spec


def build_plan(cfg: RunConfig, L: float, steps: int | None = None) -> StepPlan:
    return StepPlan(L, cfg["plan.steps"] if steps is None else steps, cfg["plan.ordering"],
                    cfg["plan.raman_sps"], cfg["plan.raman_xpm"], cfg["plan.gvd"],
                    cfg["plan.npm"], cfg["plan.antialias"])


def _wavelength(cfg, nu):
    return detuning_to_wavelength(nu, cfg["pump.wavelength"])


# -- commands -----------------------------------------------------------------

def cmd_response(cfg: RunConfig, out: Path) -> list:
    """Dump ``chi``, ``W``, ``F`` on the grid frequencies and the kernel on its times."""
    grid = build_grid(cfg)
    resp = build_resp(cfg)
    T, Om = cfg["waveguide.T"], cfg["waveguide.Omega"]
    k = coupling_W(resp, Om, T, grid)
    w = grid.omega
    chi = resp.susceptibility(w)
    nu = w / (2 * np.pi)
    head = [f"grid.n = {grid.n}", f"grid.dt = {grid.dt!r} s", f"grid.t0 = {grid.t0!r} s",
            f"raman.model = {cfg['raman.model']}", f"raman.f_R = {resp.f_R!r}",
            f"waveguide.T = {T!r} K", f"waveguide.Omega = {Om!r} rad/s"]
    f1 = write_csv(out / f"{cfg['output.prefix']}_response.csv",
                   ["omega_rad_s", "nu_Hz", "lambda_m", "chi_re", "chi_im", "W_re", "W_im", "F"],
                   zip(w, nu, _wavelength(cfg, nu), chi.real, chi.imag, k.W.real, k.W.imag, k.F),
                   head)
    f2 = write_csv(out / f"{cfg['output.prefix']}_kernel.csv", ["t_s", "kernel_re", "kernel_im"],
                   zip(grid.t, k.kernel.real, k.kernel.imag), head)
    return [f1, f2]


def run_propagation(cfg: RunConfig, t_p=None, f_R=None, T=None, nu=None, workers=None):
    t_p = cfg["pump.t_p"] if t_p is None else t_p
    L = cfg["waveguide.L"]
    if cfg["sweep.scale_length"] and t_p != cfg["pump.t_p"]:
        L *= t_p / cfg["pump.t_p"]
    kw = {"L": L}
    if T is not None:
        kw["T"] = T
    if nu is not None:
        kw["Omega"] = 2 * np.pi * nu
    spec = build_spec(cfg, **kw)
    grid = build_grid(cfg, t_p if t_p != cfg["pump.t_p"] else None)
    pump = build_pump(cfg, grid, t_p)
    return propagate(pump, spec, build_resp(cfg, f_R), grid, build_plan(cfg, L), workers=workers)


def summarize(res) -> dict:
    p = res.jta.probability()
    return {
        "R_pair": p,
        "purity": purity(res.jta) if p > 0 else float("nan"),
        "steps": res.diagnostics.steps,
        "h_m": res.plan.h,
        "ordering": res.plan.ordering,
        "edge_fraction": res.diagnostics.edge_fraction,
        "max_step_phase_rad": res.diagnostics.max_step_phase,
        "probability_monitor": res.diagnostics.probability[-3:],
    }


def cmd_propagate(cfg: RunConfig, out: Path, workers=None) -> dict:
    res = run_propagation(cfg, workers=workers)
    pre = cfg["output.prefix"]
    write_grid(out / f"{pre}_jta.jagrid", res.jta)
    write_grid(out / f"{pre}_jsa.jagrid", to_jsa(res.jta))
    g = res.pump.grid
    write_field(out / f"{pre}_pump.jagrid", res.pump.A, g.dt, g.t0)
    summary = summarize(res)
    k = cfg["analysis.modes"]
    if k > 0 and summary["R_pair"] > 0:
        s = schmidt(res.jta, k)
        for name, modes, ax in (("signal", s.f, res.jta.signal), ("idler", s.g, res.jta.idler)):
            m = modes.shape[1]
            write_grid(out / f"{pre}_modes_{name}.jagrid",
                       JointAmplitude(modes, ax, Axis(m, 1.0, 0.0), TIME))
        summary["schmidt_lambda"] = s.lam.tolist()
    text = json.dumps(summary, indent=2, sort_keys=True)
    (out / f"{pre}_summary.txt").write_text(text + "\n")
    print(text)
    return summary


_AXES = (("t_p", "sweep.t_p", "t_p_s"), ("f_R", "sweep.f_R", "f_R"),
         ("T", "sweep.T", "T_K"), ("nu", "sweep.nu", "nu_Hz"))
_METRICS = {
    "rate_ratio": ["r"],
    "pairs_to_singles": ["C_over_C0"],
    "car": ["CAR", "R_pair", "R_R_plus", "R_R_minus", "P_peak_W", "multi_pair_limit"],
    "purity": ["purity", "R_pair", "edge_fraction"],
}


def _point(cfg_text: str, quantity: str, point: dict):
    """Evaluate one sweep point; returns ``(metrics, error)``."""
    cfg = RunConfig.from_text(cfg_text)
    try:
        t_p = point.get("t_p", cfg["pump.t_p"])
        T = point.get("T", cfg["waveguide.T"])
        nu = point.get("nu", cfg["waveguide.Omega"] / (2 * np.pi))
        resp = build_resp(cfg, point.get("f_R"))
        if quantity == "rate_ratio":
            return [float(rate_bracket(resp, 2 * np.pi * abs(nu), T))], ""
        if quantity == "purity":
            if resp.f_R == 0:
                nu = 0.0  # the kernel does not depend on the detuning
            m = _purity_cached(cfg_text, t_p, resp.f_R, T, nu)
            return list(m), ""
        spec = build_spec(cfg, T=T, Omega=2 * np.pi * abs(nu))
        span = max(cfg["grid.span"], 16 * t_p)
        grid = TimeGrid.from_span(span, cfg["grid.n"])
        dw = filter_bandwidth(cfg["analysis.filter_width"], cfg["pump.wavelength"])
        if quantity == "pairs_to_singles":
            pump = build_pump(cfg, grid, t_p)
            c = pairs_to_singles(pump, spec, resp, [2 * np.pi * nu], [T], dw,
                                 cfg["analysis.singles_at"])
            return [float(c[0, 0])], ""
        P = peak_power_for_rate(cfg["analysis.R_pair"], t_p, spec, resp)
        pump = build_pump(cfg, grid, t_p, P)
        R = pair_rate_long_pulse(pump, spec, resp)
        Rp = float(raman_singles_rate(pump, spec, resp, spec.Omega, dw))
        Rm = float(raman_singles_rate(pump, spec, resp, -spec.Omega, dw))
        car = R / ((R + Rp) * (R + Rm))
        return [car, R, Rp, Rm, P, 1.0 / R], ""
    except (ValidationError, NumericalError) as exc:
        return [float("nan")] * len(_METRICS[quantity]), f"{type(exc).__name__}: {exc}"


@lru_cache(maxsize=64)
def _purity_cached(cfg_text, t_p, f_R, T, nu):
    cfg = RunConfig.from_text(cfg_text)
    res = run_propagation(cfg, t_p, f_R, T, nu, workers=1)
    return purity(res.jta), res.jta.probability(), res.diagnostics.edge_fraction


def sweep_points(cfg: RunConfig):
    axes = [(name, col, sorted(cfg[key])) for name, key, col in _AXES if cfg[key]]
    if not axes:
        raise ValidationError("sweep needs at least one of sweep.t_p, sweep.f_R, sweep.T, sweep.nu")
    names = [a[0] for a in axes]
    pts = [dict(zip(names, vals)) for vals in itertools.product(*(a[2] for a in axes))]
    return axes, pts


def cmd_sweep(cfg: RunConfig, out: Path, threads: int = 1) -> Path:
    q = cfg["sweep.quantity"]
    axes, pts = sweep_points(cfg)
    text = cfg.to_text()
    if threads > 1 and q == "purity":
        with ProcessPoolExecutor(threads) as ex:
            results = list(ex.map(_point, [text] * len(pts), [q] * len(pts), pts))
    else:
        results = [_point(text, q, p) for p in pts]
    header = [a[1] for a in axes]
    has_nu = any(a[0] == "nu" for a in axes)
    if has_nu:
        header.append("lambda_m")
    header += _METRICS[q] + ["error"]
    rows = []
    for p, (metrics, err) in zip(pts, results):
        row = [p[a[0]] for a in axes]
        if has_nu:
            row.append(float(_wavelength(cfg, p["nu"])))
        rows.append(row + metrics + [err])
    comments = [f"quantity = {q}", f"ramanfwm {__version__}"]
    return write_csv(out / f"{cfg['output.prefix']}_sweep.csv", header, rows, comments)


def richardson_reference(cfg: RunConfig, M: int, workers=None) -> np.ndarray:
    """``(4 A_{2M} - A_M) / 3`` for a second-order scheme."""
    a = run_propagation(cfg.updated(plan__steps=M), workers=workers).jta.data
    b = run_propagation(cfg.updated(plan__steps=2 * M), workers=workers).jta.data
    return (4 * b - a) / 3


def convergence_table(cfg: RunConfig, workers=None):
    """Rows ``(steps, h, error)`` and the fitted log-log slope."""
    ref = richardson_reference(cfg, cfg["converge.reference"], workers)
    nref = np.linalg.norm(ref)
    if nref == 0:
        raise ValidationError("convergence study needs a non-zero pump")
    rows = []
    for M in sorted(cfg["converge.steps"]):
        res = run_propagation(cfg.updated(plan__steps=M), workers=workers)
        rows.append((M, res.plan.h, float(np.linalg.norm(res.jta.data - ref) / nref)))
    h = np.array([r[1] for r in rows])
    e = np.array([r[2] for r in rows])
    slope = float(np.polyfit(np.log(h), np.log(e), 1)[0]) if len(rows) > 1 else float("nan")
    return rows, slope


def cmd_converge(cfg: RunConfig, out: Path, workers=None) -> Path:
    rows, slope = convergence_table(cfg, workers)
    ordering = cfg["plan.ordering"]
    print(f"fitted slope {slope:.4f}")
    return write_csv(out / f"{cfg['output.prefix']}_converge.csv",
                     ["steps", "h_m", "rel_error", "ordering"],
                     [r + (ordering,) for r in rows],
                     [f"reference = Richardson from {cfg['converge.reference']} steps",
                      f"slope = {slope:.17e}"])


# -- presets ------------------------------------------------------------------

def _list(values) -> str:
    return ", ".join(repr(float(v)) for v in values)


_FIG4_WAVEGUIDE = """\
waveguide.gamma_p = 2.0 W^-1 km^-1
waveguide.gamma_s = 2.0 W^-1 km^-1
waveguide.gamma_i = 2.0 W^-1 km^-1
waveguide.L = 100 m
waveguide.beta1s = 2e-14 s/m
waveguide.beta1i = -2e-14 s/m
pump.t_p = 1 ps
grid.n = 1024
grid.span = 32 ps
raman.f_R = 0.18
"""

_FIG6 = """\
pump.P = 1 W
pump.t_p = 0.1 ps
waveguide.L = 1 m
waveguide.beta1s = -0.2 ps/m
waveguide.beta1i = 0.2 ps/m
waveguide.gamma_p = 0.1 W^-1 m^-1
waveguide.gamma_s = 0.1 W^-1 m^-1
waveguide.gamma_i = 0.1 W^-1 m^-1
waveguide.T = 295 K
waveguide.Omega = 60e12 rad/s
grid.n = 512
grid.span = 1.6 ps
plan.steps = 256
"""


def preset(name: str) -> RunConfig:
    """Configuration reproducing one of the standard figures."""
    fine = np.round(np.concatenate([[0.01, 0.1, 0.25, 0.5], np.arange(1, 101, 1.0)]), 6)
    if name == "fig2":
        text = ("sweep.quantity = rate_ratio\nraman.f_R = 0.18\nsweep.T = 4, 77, 195, 295 K\n"
                f"sweep.nu = {_list(fine)} THz\noutput.prefix = fig2\n")
    elif name == "fig3":
        nu = np.round(np.arange(-40, 40.25, 0.25), 6)
        text = (_FIG4_WAVEGUIDE + "sweep.quantity = pairs_to_singles\nsweep.T = 4, 77, 295 K\n"
                f"sweep.nu = {_list(nu)} THz\noutput.prefix = fig3\n")
    elif name == "fig4":
        nu = np.round(np.concatenate([[0.05, 0.1, 0.25, 0.5], np.arange(1, 40.5, 0.5)]), 6)
        text = (_FIG4_WAVEGUIDE + "sweep.quantity = car\nanalysis.R_pair = 0.001\n"
                f"sweep.T = 4, 77, 295 K\nsweep.nu = {_list(nu)} THz\noutput.prefix = fig4\n")
    elif name in ("fig6a", "fig6b"):
        f = "0" if name == "fig6a" else "1"
        text = _FIG6 + f"raman.f_R = {f}\nanalysis.modes = 8\noutput.prefix = {name}\n"
    elif name == "fig7":
        nu = [1, 3, 5, 8, 10, 11, 12, 13, 14, 15, 16, 17, 18, 20, 22, 25, 30, 35, 40]
        base = _FIG6.replace("grid.n = 512", "grid.n = 256").replace("plan.steps = 256",
                                                                      "plan.steps = 128")
        text = (base + "sweep.quantity = purity\nplan.npm = false\n"
                "sweep.t_p = 0.1, 0.2, 0.5, 1 ps\nsweep.f_R = 0, 0.18\n"
                f"sweep.nu = {_list(nu)} THz\noutput.prefix = fig7\n")
    else:
        raise ValidationError(f"unknown preset {name!r}")
    return RunConfig.from_text(text)


PRESET_COMMAND = {"fig2": "sweep", "fig3": "sweep", "fig4": "sweep", "fig6a": "propagate",
                  "fig6b": "propagate", "fig7": "sweep"}


# -- entry point --------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="ramanfwm", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=__version__)
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="key = value unit file")
    common.add_argument("--out", type=Path, default=Path("."), help="output directory")
    common.add_argument("--threads", type=int, default=1, help="worker count")
    common.add_argument("--seed", type=int, default=None,
                        help="reserved; the model is deterministic")
    sub = ap.add_subparsers(dest="command", required=True)
    for name in ("respond", "propagate", "sweep", "converge"):
        sub.add_parser(name, parents=[common])
    p = sub.add_parser("preset", parents=[common])
    p.add_argument("name", choices=sorted(PRESET_COMMAND))
    return ap


def run(args) -> object:
    cfg = RunConfig.load(args.config) if args.config else RunConfig()
    command = args.command
    if command == "preset":
        cfg = preset(args.name).merged(cfg)
        command = PRESET_COMMAND[args.name]
    if args.threads < 1:
        raise ValidationError("--threads must be >= 1")
    args.out.mkdir(parents=True, exist_ok=True)
    workers = args.threads
    if command == "respond":
        return cmd_response(cfg, args.out)
    if command == "propagate":
        return cmd_propagate(cfg, args.out, workers)
    if command == "sweep":
        return cmd_sweep(cfg, args.out, args.threads)
    return cmd_converge(cfg, args.out, workers)


def main(argv=None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    try:
        run(args)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    return EXIT_OK


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
