"""JSON file formats for nets and reconstruction data, CSV residual dumps, OBJ export.

Net file::

    {"format": "asymnet-net", "version": 1, "nu": 4, "nv": 4, "dps": null,
     "positions": [[x, y, z], ...]}          # (nu+1)(nv+1) points, index (i, j) at i*(nv+1)+j

Compat file::

    {"format": "asymnet-compat", "version": 1, "nu": ..., "nv": ..., "dps": ...,
     "Omega": [...],       # nu*nv values, quad (i, j) at i*nv+j
     "A": [...], "B": [...],            # (nu+1)(nv+1) vertex values, null where undefined
     "H_u": [...],         # nu*(nv+1) u-edge values, null on boundary edges
     "H_v": [...],         # (nu+1)*nv v-edge values, null on boundary edges
     "gamma_seed": 1.0, "seed_quad": [0, 0],
     "frame": [[x, y, z] x 4],          # q(0,0), q(1,0), q(0,1), q(1,1)
     "frame_determinant": ..., "omega00_squared": ...}

With ``dps`` null, numbers are JSON floats written with shortest round-trip
repr (bit-exact).  With an integer ``dps``, numbers are decimal strings
carrying enough digits to round-trip at that precision; load inside
``mpmath.workdps(dps)`` to recover them exactly.
"""
from __future__ import annotations

import csv
import json
import math
from pathlib import Path

import mpmath
import numpy as np
from mpmath import libmp

from . import _num
from .grid import Family, SiteField, StaggeredDomain
from .net import AsymptoticNet
from .reconstruction import CompatData
from .report import ResidualReport

NET_FORMAT = "asymnet-net"
COMPAT_FORMAT = "asymnet-compat"
VERSION = 1


class FormatError(ValueError):
    """Malformed input file; ``field`` names the offending entry when known."""

    def __init__(self, path, message, field=None):
        self.path, self.field = str(path), field
        where = f" (field {field!r})" if field else ""
        super().__init__(f"{path}{where}: {message}")


def _encode(x, mp: bool):
    if mp:
        if not mpmath.isfinite(x):
            return None
        return mpmath.nstr(x, libmp.repr_dps(mpmath.mp.prec), strip_zeros=False)
    x = float(x)
    return x if math.isfinite(x) else None


def _encode_array(a, mp: bool):
    flat = np.asarray(a).reshape(-1, *np.asarray(a).shape[2:])
    if flat.ndim == 1:
        return [_encode(x, mp) for x in flat]
    return [[_encode(x, mp) for x in row] for row in flat]


def _decode(x, mp: bool, path, field):
    if x is None:
        return mpmath.mpf("nan") if mp else float("nan")
    if mp:
        try:
            return mpmath.mpf(x)
        except (TypeError, ValueError):
            raise FormatError(path, f"not a number: {x!r}", field) from None
    if isinstance(x, bool) or not isinstance(x, (int, float)):
        raise FormatError(path, f"not a number: {x!r}", field)
    return float(x)


def _decode_array(values, shape, mp, path, field):
    if not isinstance(values, list):
        raise FormatError(path, "expected a list", field)
    count = int(np.prod(shape[:2]))
    if len(values) != count:
        raise FormatError(path, f"expected {count} entries, found {len(values)}", field)
    out = np.empty(shape, dtype=object if mp else float)
    flat = out.reshape(count, *shape[2:])
    for k, v in enumerate(values):
        if len(shape) == 3:
            if not isinstance(v, list) or len(v) != shape[2]:
                raise FormatError(path, f"entry {k} must have {shape[2]} components", field)
            flat[k] = [_decode(x, mp, path, f"{field}[{k}]") for x in v]
        else:
            flat[k] = _decode(v, mp, path, f"{field}[{k}]")
    return out


def _read_json(path, fmt):
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as e:
        raise FormatError(path, f"cannot read file: {e.strerror}") from None
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        raise FormatError(path, f"invalid JSON at line {e.lineno} column {e.colno}: {e.msg}") from None
    if not isinstance(doc, dict):
        raise FormatError(path, "top level must be an object")
    if doc.get("format") != fmt:
        raise FormatError(path, f"expected format {fmt!r}, found {doc.get('format')!r}", "format")
    if doc.get("version") != VERSION:
        raise FormatError(path, f"unsupported version {doc.get('version')!r} (expected {VERSION})", "version")
    return doc


def _require(doc, key, path):
    if key not in doc:
        raise FormatError(path, "missing field", key)
    return doc[key]


def _domain(doc, path):
    nu, nv = _require(doc, "nu", path), _require(doc, "nv", path)
    if not isinstance(nu, int) or not isinstance(nv, int) or nu < 1 or nv < 1:
        raise FormatError(path, f"domain must be positive integers, got {nu!r} x {nv!r}", "nu")
    return StaggeredDomain(nu, nv)


def file_dps(path) -> int | None:
    """Precision recorded in a net or compat file (None for double precision)."""
    try:
        doc = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError):
        return None
    dps = doc.get("dps") if isinstance(doc, dict) else None
    return dps if isinstance(dps, int) and dps > 0 else None


def save_net(net: AsymptoticNet, path) -> None:
    mp = net.multiprecision
    doc = {
        "format": NET_FORMAT,
        "version": VERSION,
        "nu": net.domain.nu,
        "nv": net.domain.nv,
        "dps": mpmath.mp.dps if mp else None,
        "positions": _encode_array(net.positions, mp),
    }
    Path(path).write_text(json.dumps(doc, indent=1) + "\n")


def load_net(path) -> AsymptoticNet:
    doc = _read_json(path, NET_FORMAT)
    dom = _domain(doc, path)
    mp = doc.get("dps") is not None
    pos = _decode_array(_require(doc, "positions", path), (dom.nu + 1, dom.nv + 1, 3), mp, path, "positions")
    try:
        return AsymptoticNet.from_array(pos)
    except ValueError as e:
        raise FormatError(path, str(e), "positions") from None


def save_compat(data: CompatData, path) -> None:
    mp = data.multiprecision
    enc = lambda f: _encode_array(f.values, mp)  # noqa: E731
    doc = {
        "format": COMPAT_FORMAT,
        "version": VERSION,
        "nu": data.domain.nu,
        "nv": data.domain.nv,
        "dps": mpmath.mp.dps if mp else None,
        "Omega": enc(data.Omega),
        "A": enc(data.A),
        "B": enc(data.B),
        "H_u": enc(data.H_u),
        "H_v": enc(data.H_v),
        "gamma_seed": _encode(data.gamma_seed, mp),
        "seed_quad": list(data.seed_quad),
        "frame": _encode_array(data.frame[None], mp),
        "frame_determinant": _encode(data.frame_determinant(), mp),
        "omega00_squared": _encode(data.Omega.values[0, 0] ** 2, mp),
    }
    Path(path).write_text(json.dumps(doc, indent=1) + "\n")


def load_compat(path) -> CompatData:
    doc = _read_json(path, COMPAT_FORMAT)
    dom = _domain(doc, path)
    mp = doc.get("dps") is not None
    fields = {}
    for name, fam in (("Omega", Family.QUAD), ("A", Family.VERTEX), ("B", Family.VERTEX),
                      ("H_u", Family.UEDGE), ("H_v", Family.VEDGE)):
        vals = _decode_array(_require(doc, name, path), dom.shape(fam), mp, path, name)
        fields[name] = SiteField(dom, fam, vals)
    frame = _decode_array(_require(doc, "frame", path), (4, 1, 3), mp, path, "frame")[:, 0]
    seed = _decode(_require(doc, "gamma_seed", path), mp, path, "gamma_seed")
    sq = doc.get("seed_quad", [0, 0])
    if not (isinstance(sq, list) and len(sq) == 2 and all(isinstance(k, int) for k in sq)):
        raise FormatError(path, "seed_quad must be two integers", "seed_quad")
    try:
        return CompatData(dom, fields["Omega"], fields["A"], fields["B"], fields["H_u"], fields["H_v"],
                          frame, seed, tuple(sq))
    except ValueError as e:
        raise FormatError(path, str(e)) from None


def write_residual_csv(report: ResidualReport, path) -> None:
    """One row per site of the report's family: i, j, residual (empty where undefined)."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["i", "j", "family", "residual"])
        r = report.residual
        for i in range(r.shape[0]):
            for j in range(r.shape[1]):
                x = r[i, j]
                w.writerow([i, j, report.family.value, "" if np.isnan(x) else repr(float(x))])


def export_obj(net: AsymptoticNet, path) -> None:
    """Vertices row-major (index i*(nv+1)+j), one quad face per lattice quad.

    Faces run (i,j) -> (i+1,j) -> (i+1,j+1) -> (i,j+1), counterclockwise in
    the parameter plane, the orientation in which M > 0.
    """
    q = _num.to_float(net.positions)
    nu, nv = net.domain.nu, net.domain.nv
    idx = lambda i, j: i * (nv + 1) + j + 1  # noqa: E731  (OBJ is 1-based)
    lines = [f"# asymptotic net {nu}x{nv}"]
    lines += [f"v {x!r} {y!r} {z!r}" for x, y, z in q.reshape(-1, 3).tolist()]
    for i in range(nu):
        for j in range(nv):
            lines.append(f"f {idx(i, j)} {idx(i + 1, j)} {idx(i + 1, j + 1)} {idx(i, j + 1)}")
    Path(path).write_text("\n".join(lines) + "\n")


def read_obj_vertices(path) -> np.ndarray:
    pts = []
    for line in Path(path).read_text().splitlines():
        parts = line.split()
        if parts and parts[0] == "v":
            pts.append([float(x) for x in parts[1:4]])
    return np.array(pts)


def load_samples(path) -> np.ndarray:
    """Whitespace-separated text, three numbers per line (a sampled curve in R^3)."""
    try:
        arr = np.loadtxt(path, ndmin=2)
    except (OSError, ValueError) as e:
        raise FormatError(path, f"cannot parse samples: {e}") from None
    if arr.shape[1] != 3:
        raise FormatError(path, f"expected 3 columns, found {arr.shape[1]}")
    return arr


__all__ = [
    "FormatError",
    "export_obj",
    "file_dps",
    "load_compat",
    "load_net",
    "load_samples",
    "read_obj_vertices",
    "save_compat",
    "save_net",
    "write_residual_csv",
]
