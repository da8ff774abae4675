"""Binary field snapshots, state stores and CSV reports.

Field snapshot layout (little endian): magic ``YMH1``, one byte each for
family (0 scalar, 1 so, 2 su), matrix dimension, representation tag
(0 physical, 1 spectral), complex flag and dealias rule, then uint32 N and
float64 L, followed by the row-major values as float64 (complex values
interleave real and imaginary parts).

A gauge-state snapshot is the concatenation of its 22 component records in
manifest order (A0..A3, dtA0..dtA3, F01, F02, F03, F12, F13, F23, dtF01...,
phi, dtphi) plus a plain-text manifest alongside.

CSV reports begin with ``# key=value`` comment lines (config hash, grid
size, seed) and use shortest round-trip float formatting so identical runs
produce byte-identical artifacts.
"""
from __future__ import annotations

import csv
import hashlib
import io
import struct
from pathlib import Path

import numpy as np

from .algebra import AlgebraKind, Family
from .errors import StructureError
from .grid import Dealias, Field, GridSpec, Rep
from .system import GaugeState

_MAGIC = b"YMH1"

_FAMILY_CODE = {None: 0, Family.SO: 1, Family.SU: 2}
_FAMILY_FROM = {0: None, 1: Family.SO, 2: Family.SU}
_REP_CODE = {Rep.PHYSICAL: 0, Rep.SPECTRAL: 1}
_DEALIAS_CODE = {Dealias.NONE: 0, Dealias.TWO_THIRDS: 1}

STATE_COMPONENTS = (
    "A0", "A1", "A2", "A3",
    "dtA0", "dtA1", "dtA2", "dtA3",
    "F01", "F02", "F03", "F12", "F13", "F23",
    "dtF01", "dtF02", "dtF03", "dtF12", "dtF13", "dtF23",
    "phi", "dtphi",
)


def _field_record(field: Field) -> bytes:
    fam = _FAMILY_CODE[field.kind.family if field.kind else None]
    n_mat = field.kind.n if field.kind else 0
    is_complex = 1 if np.iscomplexobj(field.values) else 0
    head = _MAGIC + struct.pack(
        "<BBBBBIxxx d",
        fam, n_mat, _REP_CODE[field.rep], is_complex,
        _DEALIAS_CODE[field.grid.dealias], field.grid.n_points,
        field.grid.length,
    )
    vals = np.ascontiguousarray(field.values)
    if is_complex:
        body = vals.astype("<c16", copy=False).view("<f8").tobytes()
    else:
        body = vals.astype("<f8", copy=False).tobytes()
    return head + body


def _read_field_record(buf: io.BufferedReader) -> Field:
    magic = buf.read(4)
    if magic != _MAGIC:
        raise StructureError("bad snapshot magic")
    head = buf.read(struct.calcsize("<BBBBBIxxx d"))
    fam, n_mat, rep_c, is_complex, dealias_c, n, length = struct.unpack("<BBBBBIxxx d", head)
    family = _FAMILY_FROM[fam]
    kind = AlgebraKind(family, n_mat) if family is not None else None
    grid = GridSpec(n, length, Dealias.TWO_THIRDS if dealias_c else Dealias.NONE)
    shape = (n_mat, n_mat, n, n, n) if kind else (n, n, n)
    count = int(np.prod(shape)) * (2 if is_complex else 1)
    raw = np.frombuffer(buf.read(count * 8), dtype="<f8", count=count)
    vals = raw.view("<c16").reshape(shape) if is_complex else raw.reshape(shape)
    rep = Rep.SPECTRAL if rep_c else Rep.PHYSICAL
    real = not is_complex if rep is Rep.PHYSICAL else (kind.is_real if kind else True)
    return Field(grid, vals.copy(), rep, kind, real)


def write_field(path, field: Field) -> None:
    Path(path).write_bytes(_field_record(field))


def read_field(path) -> Field:
    with open(path, "rb") as fh:
        return _read_field_record(fh)


def write_state(path, state: GaugeState, header_lines=()) -> None:
    """Concatenated component records plus a text manifest at <path>.manifest."""
    path = Path(path)
    comps = (*state.a, *state.dta, *state.f, *state.dtf, state.phi, state.dtphi)
    with open(path, "wb") as fh:
        for c in comps:
            fh.write(_field_record(c))
    lines = [*header_lines, f"components = {', '.join(STATE_COMPONENTS)}"]
    Path(str(path) + ".manifest").write_text("\n".join(lines) + "\n")


def read_state(path) -> GaugeState:
    comps = []
    with open(path, "rb") as fh:
        for _ in STATE_COMPONENTS:
            comps.append(_read_field_record(fh))
    return GaugeState(tuple(comps[0:4]), tuple(comps[4:8]), tuple(comps[8:14]),
                      tuple(comps[14:20]), comps[20], comps[21])


# ---------------------------------------------------------------------------
# CSV reports


def _fmt(x) -> str:
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    if isinstance(x, (tuple, list, np.ndarray)):
        return "(" + " ".join(_fmt(v) for v in x) + ")"
    return str(x)


def write_csv(path, header_comments: dict, columns, rows) -> None:
    """Deterministic CSV with ``# key=value`` comment lines up front."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        for key in sorted(header_comments):
            fh.write(f"# {key}={_fmt(header_comments[key])}\n")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow([_fmt(x) for x in row])


def config_hash(text: str) -> str:
    return hashlib.sha256(text.encode()).hexdigest()[:16]


def symbol_bound_rows(report):
    for r in report.rows:
        yield (r.name, r.samples, r.max_ratio, r.argmax_xi, r.argmax_eta)


def angle_rows(report):
    for r in report.rows:
        yield (r.exponents, r.signs, r.samples, r.max_ratio)


def probe_rows(reports):
    for r in reports:
        yield (r.eid, "" if r.admissible is None else r.admissible, r.batch,
               r.max_ratio, f"{r.m_points}x{r.n_points}", r.seed)
