import struct

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ramanfwm.config import SCHEMA, UNITS, RunConfig, format_entry, parse_entry
from ramanfwm.errors import ValidationError
from ramanfwm.grid import FREQ, TIME, Axis, JointAmplitude
from ramanfwm.gridio import (HEADER_SIZE, MAGIC, TIME_1D, csv_text, decode, encode, fmt, read_csv,
                             read_grid, write_csv, write_field, write_grid)


@pytest.mark.parametrize("key, text, value", [
    ("pump.t_p", "0.1 ps", 0.1e-12),
    ("waveguide.L", "2 km", 2000.0),
    ("waveguide.gamma_s", "2 W^-1 km^-1", 2e-3),
    ("waveguide.beta2s", "-20 ps^2/km", -20e-27),
    ("waveguide.Omega", "60 Trad/s", 60e12),
    ("sweep.nu", "1, 2.5 THz", (1e12, 2.5e12)),
    ("sweep.T", "", ()),
    ("grid.n", "256", 256),
    ("raman.f_R", "0.18", 0.18),
    ("plan.npm", "False", False),
    ("raman.model", "single", "single"),
])
def test_parse_entry(key, text, value):
    assert parse_entry(key, text) == pytest.approx(value)


@pytest.mark.parametrize("key, text", [
    ("pump.t_p", "0.1"),            # unit missing
    ("pump.t_p", "0.1 m"),          # wrong dimension
    ("pump.t_p", "0.1 parsec"),
    ("grid.n", "256 ps"),
    ("grid.n", "2.5"),
    ("raman.f_R", "0.18 W"),
    ("plan.npm", "yes"),
    ("raman.model", "quartz"),
    ("pump.P", "1, 2 W"),
    ("pump.P", "nan W"),
    ("nope.key", "1"),
])
def test_parse_entry_rejects(key, text):
    with pytest.raises(ValidationError):
        parse_entry(key, text)


def test_from_text_rules():
    c = RunConfig.from_text("# header\npump.P = 2 W  # trailing\n\nwaveguide.T = 4 K\n")
    assert c["pump.P"] == 2.0 and c["waveguide.T"] == 4.0 and c["grid.n"] == 512
    for bad in ("pump.P = 1 W\npump.P = 2 W\n", "pump.P 1 W\n"):
        with pytest.raises(ValidationError):
            RunConfig.from_text(bad)
    assert c.updated(grid__n=64)["grid.n"] == 64
    assert RunConfig() == RunConfig.from_text(RunConfig().to_text(full=True))


def _value(key):
    spec = SCHEMA[key]
    if spec.kind == "str":
        return st.sampled_from(spec.choices) if spec.choices else st.sampled_from(["", "x.txt"])
    if spec.kind == "bool":
        return st.booleans()
    if spec.kind == "int":
        one = st.integers(1, 10 ** 6)
    else:
        one = st.floats(-1e30, 1e30, allow_nan=False, allow_infinity=False)
    return st.lists(one, max_size=5).map(tuple) if spec.many else one


@settings(max_examples=60, deadline=None)
@given(st.data())
def test_round_trip(data):
    keys = data.draw(st.lists(st.sampled_from(sorted(SCHEMA)), unique=True, max_size=12))
    vals = {k: data.draw(_value(k)) for k in keys}
    c = RunConfig(vals)
    text = c.to_text()
    back = RunConfig.from_text(text)
    assert back == c
    assert back.to_text() == text


def test_every_dimension_has_an_si_spelling():
    for key, spec in SCHEMA.items():
        if spec.kind not in ("str", "bool", "int", "number"):
            unit = format_entry(spec, spec.default).split(" ", 1)[-1] if not spec.many else None
            if unit:
                assert UNITS[unit] == (spec.kind, 1.0)


def _grid_amp(rng, ns, ni, domain=TIME):
    data = rng.normal(size=(ns, ni)) + 1j * rng.normal(size=(ns, ni))
    return JointAmplitude(data, Axis(ns, 1e-14, -ns / 2 * 1e-14), Axis(ni, 2e-14, -3e-13), domain)


def test_jagrid_layout(rng, tmp_path):
    A = _grid_amp(rng, 4, 3, FREQ)
    buf = encode(A)
    assert HEADER_SIZE == 56 and buf[:8] == MAGIC
    ns, ni = struct.unpack_from("<II", buf, 8)
    steps = struct.unpack_from("<4d", buf, 16)
    assert (ns, ni) == (4, 3) and steps == (1e-14, 2e-14, A.signal.origin, -3e-13)
    assert buf[48] == 1 and buf[49:56] == bytes(7)
    payload = np.frombuffer(buf[56:], "<f8")
    assert payload[0] == A.data[0, 0].real and payload[1] == A.data[0, 0].imag
    assert payload[2] == A.data[0, 1].real  # signal-major
    p = write_grid(tmp_path / "a.jagrid", A)
    B = read_grid(p)
    assert np.array_equal(B.data, A.data) and B.signal == A.signal and B.idler == A.idler
    assert B.domain == FREQ


def test_jagrid_field_and_rejects(rng, tmp_path):
    v = rng.normal(size=8) + 0j
    p = write_field(tmp_path / "f.jagrid", v, 0.5, -2.0)
    B = read_grid(p)
    assert B.shape == (8, 1) and B.meta["one_dimensional"] and B.domain == TIME
    assert p.read_bytes()[48] == TIME_1D
    good = encode(_grid_amp(rng, 2, 2))
    for bad in (b"XXGRID1\x00" + good[8:], good[:40], good[:-1],
                good[:48] + bytes([7]) + good[49:]):
        with pytest.raises(ValidationError):
            decode(bad)
    wide = encode(_grid_amp(rng, 2, 2), TIME_1D)
    with pytest.raises(ValidationError):
        decode(wide)


def test_csv_is_round_trip_exact(tmp_path):
    vals = [0.1, 1 / 3, np.pi * 1e-13, -2.5e300, 5e-324]
    assert fmt(0.1) == "1.0000000000000001e-01"
    assert fmt(3) == "3" and fmt("x") == "x" and fmt(True) == "1"
    p = write_csv(tmp_path / "x.csv", ["a", "b"], [[v, "ok"] for v in vals], ["note"])
    assert p.read_text().startswith("# note\na,b\n")
    header, rows = read_csv(p)
    assert header == ["a", "b"]
    assert [r[0] for r in rows] == vals and rows[0][1] == "ok"
    assert csv_text(["a"], [[1.5]]) == "a\n1.5000000000000000e+00\n"
