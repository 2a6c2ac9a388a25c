"""Portable tensor file: plain-text key/value header, then raw little-endian float32."""
from __future__ import annotations

from pathlib import Path

import numpy as np

from .tensor import Tensor

MAGIC = "TENSOR v1"
_END = "end"


def write_header(fh, fields, magic=MAGIC):
    lines = [magic] + [f"{k}={v}" for k, v in fields.items()] + [_END]
    fh.write(("\n".join(lines) + "\n").encode("ascii"))


def read_header(fh, magic):
    first = fh.readline().decode("ascii").strip()
    if first != magic:
        raise ValueError(f"bad magic line {first!r}, expected {magic!r}")
    fields = {}
    while True:
        line = fh.readline()
        if not line:
            raise ValueError("truncated header")
        line = line.decode("ascii").strip()
        if line == _END:
            return fields
        key, _, value = line.partition("=")
        fields[key.strip()] = value.strip()


def save_tensor(path, array):
    """Write ``array`` (Tensor or ndarray) as a float32 tensor file."""
    if isinstance(array, Tensor):
        array = array.data
    array = np.ascontiguousarray(array, dtype="<f4")
    with open(path, "wb") as fh:
        write_header(fh, {"shape": ",".join(str(d) for d in array.shape), "dtype": "float32", "byteorder": "little"})
        fh.write(array.tobytes(order="C"))


def load_tensor(path):
    with open(path, "rb") as fh:
        fields = read_header(fh, MAGIC)
        if fields.get("dtype") != "float32" or fields.get("byteorder") != "little":
            raise ValueError(f"unsupported tensor encoding {fields}")
        shape = tuple(int(d) for d in fields["shape"].split(",") if d) if fields.get("shape") else ()
        payload = fh.read()
    count = int(np.prod(shape, dtype=np.int64))
    if len(payload) != 4 * count:
        raise ValueError(f"payload has {len(payload)} bytes, expected {4 * count} for shape {shape}")
    return np.frombuffer(payload, dtype="<f4").reshape(shape).astype(np.float32)


def save_state(directory, state):
    """Write a ``{name: array}`` mapping as one tensor file per entry."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    for name, array in state.items():
        save_tensor(directory / f"{name}.tensor", array)


def load_state(directory):
    directory = Path(directory)
    return {p.name[: -len(".tensor")]: load_tensor(p) for p in sorted(directory.glob("*.tensor"))}
