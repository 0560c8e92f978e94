"""Text formats: NLG-FIELD files, key=value metadata, JSON reports, checkpoints.

An NLG-FIELD file is a header line

    NLG-FIELD v1 <kind> <nx> <ny> <hx> <hy>

followed by whitespace separated floats written with 17 significant digits
(exact round trip).  Arrays are row-major; vector files hold the x block
then the y block, tensor files the s11, s12, s22 blocks, and trace files the
bottom, right, top, left edges.
"""

from __future__ import annotations

import json
import math
from pathlib import Path

import numpy as np

from .grid import BoundaryTrace, Grid, ScalarField, VectorField

__all__ = [
    "MAGIC",
    "SCHEMA_VERSION",
    "FieldFormatError",
    "write_field",
    "read_field",
    "read_header",
    "write_tensor",
    "read_tensor",
    "write_meta",
    "read_meta",
    "write_report",
    "read_report",
    "save_checkpoint",
    "load_checkpoint",
]

MAGIC = "NLG-FIELD"
VERSION = "v1"
SCHEMA_VERSION = 1
KINDS = ("scalar", "vector", "trace", "tensor")


class FieldFormatError(ValueError):
    """Malformed NLG-FIELD file."""


def _fmt(x):
    return "%.17g" % x


def _write(path, kind, grid, blocks):
    lines = [f"{MAGIC} {VERSION} {kind} {grid.nx} {grid.ny} {_fmt(grid.hx)} {_fmt(grid.hy)}"]
    for block in blocks:
        block = np.atleast_2d(block)
        for row in block:
            lines.append(" ".join(map(_fmt, row)))
    Path(path).write_text("\n".join(lines) + "\n")


def read_header(path):
    """``(kind, grid, data)`` with ``data`` the flat float payload."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise FileNotFoundError(f"cannot read field file {path}: {exc.strerror}") from None
    head, _, body = text.partition("\n")
    parts = head.split()
    if len(parts) != 7 or parts[0] != MAGIC:
        raise FieldFormatError(f"{path}: not an {MAGIC} file")
    if parts[1] != VERSION:
        raise FieldFormatError(f"{path}: unsupported version {parts[1]}")
    kind = parts[2]
    if kind not in KINDS:
        raise FieldFormatError(f"{path}: unknown kind {kind!r}")
    try:
        grid = Grid(int(parts[3]), int(parts[4]), float(parts[5]), float(parts[6]))
        data = np.array(body.split(), dtype=float)
    except ValueError as exc:
        raise FieldFormatError(f"{path}: {exc}") from None
    return kind, grid, data


def _expect(path, data, n):
    if data.size != n:
        raise FieldFormatError(f"{path}: expected {n} values, found {data.size}")


def write_field(path, f):
    """Write a ScalarField, VectorField or BoundaryTrace."""
    if isinstance(f, ScalarField):
        _write(path, "scalar", f.grid, [f.values])
    elif isinstance(f, VectorField):
        _write(path, "vector", f.grid, [f.x, f.y])
    elif isinstance(f, BoundaryTrace):
        _write(path, "trace", f.grid, [f.values[None, :]])
    else:
        raise TypeError(f"cannot write {type(f).__name__}")


def read_field(path, kind=None):
    """Read a scalar, vector or trace file; ``kind`` optionally asserts the kind."""
    k, grid, data = read_header(path)
    if kind is not None and k != kind:
        raise FieldFormatError(f"{path}: expected a {kind} field, found {k}")
    nx, ny = grid.nx, grid.ny
    if k == "scalar":
        _expect(path, data, nx * ny)
        return ScalarField(grid, data.reshape(ny, nx))
    if k == "vector":
        nxf = ny * (nx + 1)
        _expect(path, data, nxf + (ny + 1) * nx)
        return VectorField(grid, data[:nxf].reshape(ny, nx + 1), data[nxf:].reshape(ny + 1, nx))
    if k == "trace":
        _expect(path, data, grid.n_boundary)
        return BoundaryTrace(grid, data)
    raise FieldFormatError(f"{path}: tensor files are read with read_tensor")


def write_tensor(path, grid: Grid, S):
    S = np.asarray(S, float)
    if S.shape != grid.shape + (3,):
        raise ValueError(f"tensor must have shape {grid.shape + (3,)}")
    _write(path, "tensor", grid, [S[..., 0], S[..., 1], S[..., 2]])


def read_tensor(path):
    """``(grid, S)`` with ``S`` of shape ``(ny, nx, 3)``."""
    k, grid, data = read_header(path)
    if k != "tensor":
        raise FieldFormatError(f"{path}: expected a tensor field, found {k}")
    n = grid.nx * grid.ny
    _expect(path, data, 3 * n)
    return grid, np.stack([data[i * n:(i + 1) * n].reshape(grid.shape) for i in range(3)], axis=-1)


# key=value metadata


def _meta_value(text):
    for conv in (int, float):
        try:
            return conv(text)
        except ValueError:
            pass
    if text in ("true", "false"):
        return text == "true"
    return text


def write_meta(path, data: dict):
    lines = []
    for key in sorted(data):
        v = data[key]
        if isinstance(v, bool):
            v = "true" if v else "false"
        elif isinstance(v, float):
            v = _fmt(v)
        lines.append(f"{key}={v}")
    Path(path).write_text("\n".join(lines) + "\n")


def read_meta(path) -> dict:
    """Parse ``key=value`` lines; blank lines and ``#`` comments are skipped."""
    out = {}
    for n, line in enumerate(Path(path).read_text().splitlines(), 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        key, sep, value = line.partition("=")
        if not sep or not key.strip():
            raise ValueError(f"{path}:{n}: expected key=value")
        out[key.strip()] = _meta_value(value.strip())
    return out


# JSON reports


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        x = float(obj)
        return x if math.isfinite(x) else repr(x)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def write_report(path, report: dict):
    """JSON with a ``schema_version`` key; floats use Python's round-trip repr."""
    body = {"schema_version": SCHEMA_VERSION}
    body.update(_jsonable(report))
    Path(path).write_text(json.dumps(body, indent=2, sort_keys=True) + "\n")


def read_report(path) -> dict:
    data = json.loads(Path(path).read_text())
    if data.get("schema_version") != SCHEMA_VERSION:
        raise ValueError(f"{path}: unsupported report schema {data.get('schema_version')!r}")
    return data


# checkpoints


def save_checkpoint(directory, state):
    """Write a solver state as NLG-FIELD files plus ``meta.txt``."""
    from .solver import SolverState  # noqa: F401  (documents the expected type)

    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    for name in ("u", "v", "w", "u_g"):
        write_field(d / f"{name}.fld", getattr(state, name))
    for name in ("d", "b"):
        write_field(d / f"{name}.fld", getattr(state, name))
    write_meta(d / "meta.txt", {"format": "nlg-checkpoint", "k": state.k,
                                "beta": state.beta, "gw": state.gw})


def load_checkpoint(directory):
    from .solver import SolverState

    d = Path(directory)
    meta = read_meta(d / "meta.txt")
    if meta.get("format") != "nlg-checkpoint":
        raise FieldFormatError(f"{d}: not a checkpoint directory")
    f = {n: read_field(d / f"{n}.fld", "scalar") for n in ("u", "v", "w", "u_g")}
    vec = {n: read_field(d / f"{n}.fld", "vector") for n in ("d", "b")}
    return SolverState(int(meta["k"]), f["u"], f["v"], vec["d"], vec["b"],
                       float(meta["beta"]), f["w"], f["u_g"], float(meta["gw"]))
