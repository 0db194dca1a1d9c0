"""Portable field files: one UTF-8 JSON header line, then little-endian float64 values.

Header keys: version, d, n, L, components, dtype ("f64"), order ("row-major"),
component_shape. The payload holds n^d * components numbers in C order with the
component axes last.
"""

import json
import math

import numpy as np

from .errors import DomainError
from .fields import Field, PeriodicGrid

FORMAT_VERSION = 1


def encode_field(field):
    comp = list(field.comp_shape)
    header = {
        "version": FORMAT_VERSION,
        "d": field.grid.d,
        "n": field.grid.n,
        "L": field.grid.L,
        "components": int(math.prod(comp)),
        "dtype": "f64",
        "order": "row-major",
        "component_shape": comp,
    }
    line = json.dumps(header, sort_keys=True).encode("utf-8") + b"\n"
    return line + np.ascontiguousarray(field.values, dtype="<f8").tobytes()


def decode_field(blob):
    head, sep, payload = blob.partition(b"\n")
    if not sep:
        raise DomainError("field file has no header line")
    try:
        header = json.loads(head.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise DomainError(f"unreadable field header: {exc}") from exc
    missing = {"version", "d", "n", "L", "components", "dtype", "order"} - header.keys()
    if missing:
        raise DomainError(f"field header lacks {sorted(missing)}")
    if header["version"] != FORMAT_VERSION or header["dtype"] != "f64" or header["order"] != "row-major":
        raise DomainError("unsupported field encoding")
    grid = PeriodicGrid(int(header["d"]), int(header["n"]), float(header["L"]))
    comp = tuple(header.get("component_shape", [header["components"]]))
    if math.prod(comp) != header["components"]:
        raise DomainError("component_shape disagrees with components")
    expected = grid.n**grid.d * header["components"] * 8
    if len(payload) != expected:
        raise DomainError(f"payload has {len(payload)} bytes, expected {expected}")
    values = np.frombuffer(payload, dtype="<f8").reshape(grid.shape + comp)
    return Field(grid, values.astype(float))


def write_field(path, field):
    with open(path, "wb") as fh:
        fh.write(encode_field(field))


def read_field(path):
    with open(path, "rb") as fh:
        return decode_field(fh.read())
