"""Flat ``key = value unit`` run configuration.

Example::

    # comment
    pump.t_p = 0.1 ps
    waveguide.gamma_s = 0.1 W^-1 m^-1
    sweep.T = 4, 77, 295 K
    plan.ordering = symmetric

Physical entries must carry a unit; values are stored in SI.  Lists are
comma separated with one trailing unit.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ValidationError

# unit spelling -> (dimension, factor to SI)
UNITS = {
    "s": ("time", 1.0), "ns": ("time", 1e-9), "ps": ("time", 1e-12), "fs": ("time", 1e-15),
    "m": ("length", 1.0), "km": ("length", 1e3), "mm": ("length", 1e-3),
    "um": ("length", 1e-6), "nm": ("length", 1e-9),
    "W": ("power", 1.0), "mW": ("power", 1e-3), "kW": ("power", 1e3),
    "K": ("temperature", 1.0),
    "rad/s": ("angular", 1.0), "Trad/s": ("angular", 1e12),
    "Hz": ("frequency", 1.0), "GHz": ("frequency", 1e9), "THz": ("frequency", 1e12),
    "W^-1 m^-1": ("gamma", 1.0), "W^-1 km^-1": ("gamma", 1e-3),
    "s/m": ("slowness", 1.0), "ps/m": ("slowness", 1e-12), "ps/km": ("slowness", 1e-15),
    "s^2/m": ("beta2", 1.0), "ps^2/m": ("beta2", 1e-24), "ps^2/km": ("beta2", 1e-27),
    "s^3/m": ("beta3", 1.0), "ps^3/m": ("beta3", 1e-36), "ps^3/km": ("beta3", 1e-39),
    "s^4/m": ("beta4", 1.0), "ps^4/km": ("beta4", 1e-51),
}
SI_UNIT = {"time": "s", "length": "m", "power": "W", "temperature": "K", "angular": "rad/s",
           "frequency": "Hz", "gamma": "W^-1 m^-1", "slowness": "s/m", "beta2": "s^2/m",
           "beta3": "s^3/m", "beta4": "s^4/m"}


@dataclass(frozen=True)
class Key:
    kind: str  # a dimension from SI_UNIT, or "number", "int", "bool", "str"
    default: object = None
    many: bool = False
    choices: tuple = ()


SCHEMA = {
    "waveguide.L": Key("length", 1.0),
    "waveguide.gamma_p": Key("gamma", 0.1),
    "waveguide.gamma_s": Key("gamma", 0.1),
    "waveguide.gamma_i": Key("gamma", 0.1),
    "waveguide.beta1s": Key("slowness", -2e-13),
    "waveguide.beta1i": Key("slowness", 2e-13),
    "waveguide.beta2s": Key("beta2", 0.0),
    "waveguide.beta2i": Key("beta2", 0.0),
    "waveguide.beta3s": Key("beta3", 0.0),
    "waveguide.beta3i": Key("beta3", 0.0),
    "waveguide.T": Key("temperature", 295.0),
    "waveguide.Omega": Key("angular", 60e12),
    "pump.P": Key("power", 1.0),
    "pump.t_p": Key("time", 0.1e-12),
    "pump.beta2": Key("beta2", 0.0),
    "pump.beta3": Key("beta3", 0.0),
    "pump.wavelength": Key("length", 1550e-9),
    "raman.model": Key("str", "silica", choices=("silica", "instantaneous", "single", "table")),
    "raman.f_R": Key("number", 0.18),
    "raman.tau1": Key("time", 12.2e-15),
    "raman.tau2": Key("time", 32e-15),
    "raman.table": Key("str", ""),
    "raman.dt": Key("time", 0.25e-15),
    "grid.n": Key("int", 512),
    "grid.span": Key("time", 1.6e-12),
    "plan.steps": Key("int", 256),
    "plan.ordering": Key("str", "symmetric", choices=("symmetric", "naive")),
    "plan.npm": Key("bool", True),
    "plan.gvd": Key("bool", True),
    "plan.raman_sps": Key("bool", True),
    "plan.raman_xpm": Key("bool", True),
    "plan.antialias": Key("bool", True),
    "analysis.filter_width": Key("length", 1e-9),
    "analysis.R_pair": Key("number", 1e-3),
    "analysis.singles_at": Key("str", "delta", choices=("delta", "signal")),
    "analysis.modes": Key("int", 0),
    "sweep.nu": Key("frequency", (), many=True),
    "sweep.T": Key("temperature", (), many=True),
    "sweep.t_p": Key("time", (), many=True),
    "sweep.f_R": Key("number", (), many=True),
    "sweep.quantity": Key("str", "rate_ratio",
                          choices=("rate_ratio", "pairs_to_singles", "car", "purity")),
    "sweep.scale_length": Key("bool", True),
    "converge.steps": Key("int", (8, 16, 32, 64), many=True),
    "converge.reference": Key("int", 512),
    "output.prefix": Key("str", "run"),
}


def _parse_number(tok: str) -> float:
    try:
        return float(tok)
    except ValueError:
        raise ValidationError(f"not a number: {tok!r}") from None


def _split_value(text: str):
    """``"1, 2 ps"`` -> (["1", "2"], "ps")."""
    toks = text.replace(",", " , ").split()
    nums, i = [], 0
    while i < len(toks):
        t = toks[i]
        if t == ",":
            i += 1
            continue
        try:
            float(t)
        except ValueError:
            break
        nums.append(t)
        i += 1
    unit = " ".join(toks[i:])
    return nums, unit


def parse_entry(key: str, text: str):
    if key not in SCHEMA:
        raise ValidationError(f"unknown config key {key!r}")
    spec = SCHEMA[key]
    text = text.strip()
    if spec.kind == "str":
        if spec.choices and text not in spec.choices:
            raise ValidationError(f"{key} must be one of {spec.choices}")
        return text
    if spec.kind == "bool":
        low = text.lower()
        if low not in ("true", "false"):
            raise ValidationError(f"{key} must be true or false")
        return low == "true"
    nums, unit = _split_value(text)
    if not nums:
        if spec.many:
            return ()
        raise ValidationError(f"{key}: no value")
    if not spec.many and len(nums) != 1:
        raise ValidationError(f"{key} takes a single value")
    if spec.kind == "int":
        if unit:
            raise ValidationError(f"{key} is a count and takes no unit")
        vals = []
        for t in nums:
            v = _parse_number(t)
            if v != int(v):
                raise ValidationError(f"{key} must be an integer")
            vals.append(int(v))
    elif spec.kind == "number":
        if unit:
            raise ValidationError(f"{key} is dimensionless and takes no unit")
        vals = [_parse_number(t) for t in nums]
    else:
        if not unit:
            raise ValidationError(f"{key} needs a unit ({SI_UNIT[spec.kind]} or similar)")
        if unit not in UNITS:
            raise ValidationError(f"{key}: unknown unit {unit!r}")
        dim, scale = UNITS[unit]
        if dim != spec.kind:
            raise ValidationError(f"{key}: unit {unit!r} is a {dim}, expected {spec.kind}")
        vals = [_parse_number(t) * scale for t in nums]
    if any(not np.isfinite(v) for v in vals):
        raise ValidationError(f"{key}: values must be finite")
    return tuple(vals) if spec.many else vals[0]


@dataclass(frozen=True)
class RunConfig:
    """Validated configuration; unset keys take their schema default."""

    values: dict = field(default_factory=dict)

    def __post_init__(self):
        for k in self.values:
            if k not in SCHEMA:
                raise ValidationError(f"unknown config key {k!r}")

    def __getitem__(self, key: str):
        if key in self.values:
            return self.values[key]
        if key not in SCHEMA:
            raise KeyError(key)
        return SCHEMA[key].default

    def __eq__(self, other):
        return isinstance(other, RunConfig) and self.resolved() == other.resolved()

    def resolved(self) -> dict:
        return {k: self[k] for k in SCHEMA}

    def updated(self, **kw) -> "RunConfig":
        """Copy with dotted keys given as ``section__name`` keywords."""
        vals = dict(self.values)
        for k, v in kw.items():
            vals[k.replace("__", ".")] = v
        return RunConfig(vals)

    def merged(self, other: "RunConfig") -> "RunConfig":
        return RunConfig({**self.values, **other.values})

    @classmethod
    def from_text(cls, text: str) -> "RunConfig":
        vals = {}
        for ln, raw in enumerate(text.splitlines(), 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValidationError(f"line {ln}: expected 'key = value'")
            k, v = (s.strip() for s in line.split("=", 1))
            if k in vals:
                raise ValidationError(f"line {ln}: duplicate key {k!r}")
            vals[k] = parse_entry(k, v)
        return cls(vals)

    @classmethod
    def load(cls, path) -> "RunConfig":
        return cls.from_text(Path(path).read_text())

    def to_text(self, full: bool = False) -> str:
        """Serialize in SI units; ``full`` also writes defaulted keys."""
        lines = []
        for k, spec in SCHEMA.items():
            if not full and k not in self.values:
                continue
            lines.append(f"{k} = {format_entry(spec, self[k])}")
        return "\n".join(lines) + "\n"


def format_entry(spec: Key, v) -> str:
    if spec.kind == "str":
        return v
    if spec.kind == "bool":
        return "true" if v else "false"
    vals = v if spec.many else (v,)
    body = ", ".join(repr(int(x)) if spec.kind == "int" else repr(float(x)) for x in vals)
    if spec.kind in SI_UNIT:
        body = f"{body} {SI_UNIT[spec.kind]}".strip()
    return body
