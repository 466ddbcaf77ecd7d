"""Reader/writer for the ``.dtz`` binary tensor format.

Layout (all little-endian)::

    b"DATS" | u16 version=1 | u8 dtype=1 (f64) | u8 ndim | ndim x u64 dims | f64 payload (row-major)
"""
import struct

import numpy as np

from .tensor import MAX_NDIM, as_tensor

MAGIC = b"DATS"
VERSION = 1
DTYPE_F64 = 1
_HEADER = struct.Struct("<4sHBB")


class DtzFormatError(ValueError):
    pass


def to_bytes(X):
    X = as_tensor(X)
    head = _HEADER.pack(MAGIC, VERSION, DTYPE_F64, X.ndim)
    dims = struct.pack(f"<{X.ndim}Q", *X.shape)
    return head + dims + np.ascontiguousarray(X, dtype="<f8").tobytes()


def from_bytes(buf):
    if len(buf) < _HEADER.size:
        raise DtzFormatError("truncated header")
    magic, version, dtype, ndim = _HEADER.unpack_from(buf, 0)
    if magic != MAGIC:
        raise DtzFormatError(f"bad magic {magic!r}")
    if version != VERSION:
        raise DtzFormatError(f"unsupported version {version}")
    if dtype != DTYPE_F64:
        raise DtzFormatError(f"unsupported dtype code {dtype}")
    if not 1 <= ndim <= MAX_NDIM:
        raise DtzFormatError(f"bad ndim {ndim}")
    off = _HEADER.size
    if len(buf) < off + 8 * ndim:
        raise DtzFormatError("truncated dims")
    dims = struct.unpack_from(f"<{ndim}Q", buf, off)
    off += 8 * ndim
    count = 1
    for n in dims:
        count *= n
    if len(buf) - off != 8 * count:
        raise DtzFormatError(f"payload is {len(buf) - off} bytes, expected {8 * count}")
    arr = np.frombuffer(buf, dtype="<f8", count=count, offset=off).astype(np.float64)
    return as_tensor(arr.reshape(dims))


def save(path, X):
    with open(path, "wb") as fh:
        fh.write(to_bytes(X))


def load(path):
    with open(path, "rb") as fh:
        return from_bytes(fh.read())
