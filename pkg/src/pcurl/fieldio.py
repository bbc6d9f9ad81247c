"""Binary field dumps.

A dump is one line of JSON metadata terminated by ``\\n`` followed by the
raw little-endian float64 component arrays, x/y/z order, each written with
the x index varying fastest.
"""
from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .grid import BoxDomain, CellField, ContractError, EdgeField, FaceField, NodeField

_KINDS = {cls.kind: cls for cls in (EdgeField, FaceField, NodeField, CellField)}
MAGIC = "pcurl-field"


def _header(kind, shape, lengths, shapes, components):
    return {
        "format": MAGIC,
        "version": 1,
        "kind": kind,
        "grid": list(shape),
        "lengths": list(lengths),
        "components": components,
        "shapes": [list(s) for s in shapes],
        "dtype": "<f8",
        "order": "x-fastest",
    }


def _write(path, header, arrays):
    path = Path(path)
    with open(path, "wb") as fh:
        fh.write(json.dumps(header, sort_keys=True).encode() + b"\n")
        for a in arrays:
            fh.write(np.asarray(a, dtype="<f8").ravel(order="F").tobytes())
    return path


def write_field(path, field) -> Path:
    comps = field.components
    names = ["x", "y", "z"] if len(comps) == 3 else ["scalar"]
    g = field.grid
    return _write(path, _header(field.kind, g.shape, g.lengths, [c.shape for c in comps], names), comps)


def write_field2d(path, field2d) -> Path:
    g = field2d.grid
    v = field2d.values
    return _write(path, _header("node2d", g.shape, g.lengths, [v.shape], ["scalar"]), [v])


def _read(path):
    with open(path, "rb") as fh:
        line = fh.readline()
        try:
            header = json.loads(line)
        except ValueError as exc:
            raise ContractError(f"{path}: bad field header") from exc
        if header.get("format") != MAGIC or header.get("dtype") != "<f8":
            raise ContractError(f"{path}: not a float64 field dump")
        arrays = []
        for shp in header["shapes"]:
            n = int(np.prod(shp))
            buf = fh.read(8 * n)
            if len(buf) != 8 * n:
                raise ContractError(f"{path}: truncated field data")
            arrays.append(np.frombuffer(buf, dtype="<f8").reshape(shp, order="F"))
        if fh.read(1):
            raise ContractError(f"{path}: trailing bytes after field data")
    return header, arrays


def read_field(path):
    header, arrays = _read(path)
    kind = header["kind"]
    if kind == "node2d":
        from .oracle2d import Grid2D, Scalar2DField

        return Scalar2DField(Grid2D(tuple(header["lengths"]), tuple(header["grid"])), arrays[0])
    if kind not in _KINDS:
        raise ContractError(f"{path}: unknown field kind {kind!r}")
    g = BoxDomain(tuple(header["lengths"]), tuple(header["grid"]))
    return _KINDS[kind].from_components(g, *arrays)
