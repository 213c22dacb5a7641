"""Binary ``JAGRID1`` grids and CSV writing.

Layout (little-endian)::

    8 bytes  magic b"JAGRID1\\0"
    u32 N_s, u32 N_i
    f64 step_s, f64 step_i, f64 origin_s, f64 origin_i
    u8 domain (0 time, 1 frequency, 2 one-dimensional time field), 7 pad bytes
    N_s * N_i pairs of f64 (re, im), signal-major

A one-dimensional field (the pump) is stored with ``N_i = 1`` and domain 2.
"""

from __future__ import annotations

import csv
import io
import struct
from pathlib import Path

import numpy as np

from .errors import ValidationError
from .grid import FREQ, TIME, Axis, JointAmplitude

MAGIC = b"JAGRID1\x00"
_HEADER = struct.Struct("<8sIIddddB7x")
HEADER_SIZE = _HEADER.size  # 56


TIME_1D = 2


def encode(A: JointAmplitude, flag: int | None = None) -> bytes:
    ns, ni = A.shape
    if flag is None:
        flag = 1 if A.domain == FREQ else 0
    head = _HEADER.pack(MAGIC, ns, ni, A.signal.step, A.idler.step, A.signal.origin,
                        A.idler.origin, flag)
    return head + np.ascontiguousarray(A.data, dtype="<c16").tobytes()


def decode(buf: bytes) -> JointAmplitude:
    if len(buf) < HEADER_SIZE:
        raise ValidationError("truncated JAGRID1 header")
    magic, ns, ni, ds, di, os_, oi, dom = _HEADER.unpack_from(buf)
    if magic != MAGIC:
        raise ValidationError("not a JAGRID1 file")
    if dom not in (0, 1, TIME_1D):
        raise ValidationError(f"bad domain flag {dom}")
    if dom == TIME_1D and ni != 1:
        raise ValidationError("a one-dimensional field needs N_i = 1")
    payload = buf[HEADER_SIZE:]
    if len(payload) != ns * ni * 16:
        raise ValidationError("JAGRID1 payload size does not match header")
    data = np.frombuffer(payload, dtype="<c16").reshape(ns, ni).astype(complex)
    return JointAmplitude(data, Axis(ns, ds, os_), Axis(ni, di, oi), FREQ if dom == 1 else TIME,
                          {"one_dimensional": dom == TIME_1D})


def write_grid(path, A: JointAmplitude) -> Path:
    path = Path(path)
    path.write_bytes(encode(A))
    return path


def write_field(path, values, step: float, origin: float) -> Path:
    """Store a 1-D time-domain field (domain flag 2)."""
    path = Path(path)
    path.write_bytes(encode(field_as_grid(values, step, origin), TIME_1D))
    return path


def read_grid(path) -> JointAmplitude:
    return decode(Path(path).read_bytes())


def field_as_grid(values, step: float, origin: float, domain: str = TIME) -> JointAmplitude:
    """Wrap a 1-D complex array as an ``N x 1`` grid."""
    v = np.asarray(values, dtype=complex).reshape(-1, 1)
    return JointAmplitude(v, Axis(v.shape[0], step, origin), Axis(1, 1.0, 0.0), domain)


def fmt(x) -> str:
    """17 significant digits, scientific notation; strings pass through."""
    if isinstance(x, str):
        return x
    if isinstance(x, (bool, np.bool_)):
        return str(int(x))
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return f"{float(x):.16e}"


def csv_text(header, rows, comments=()) -> str:
    out = io.StringIO()
    for c in comments:
        out.write(f"# {c}\n")
    w = csv.writer(out, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([fmt(v) for v in r])
    return out.getvalue()


def write_csv(path, header, rows, comments=()) -> Path:
    path = Path(path)
    path.write_text(csv_text(header, rows, comments))
    return path


def read_csv(path):
    """Return ``(header, rows)`` with numeric cells as float; comment lines skipped."""
    lines = [ln for ln in Path(path).read_text().splitlines() if not ln.startswith("#")]
    r = list(csv.reader(lines))
    header, body = r[0], r[1:]

    def conv(s):
        try:
            return float(s)
        except ValueError:
            return s

    return header, [[conv(c) for c in row] for row in body]
