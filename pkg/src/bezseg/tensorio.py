"""Binary tensor container for dense maps and feature stacks.

Layout, little-endian throughout:

    magic    4 bytes   b"ULTD"
    version  u32       1
    dtype    u8        0 = float32
    ndim     u8
    dims     ndim x u64
    payload  row-major float32, 4 * prod(dims) bytes

Values are stored at float32 precision; a write/read round trip is byte
identical.
"""

import struct

import numpy as np

from .fileutil import atomic_write_bytes
from .validation import InputValidationError

MAGIC = b"ULTD"
VERSION = 1
DTYPE_F32 = 0
MAX_NDIM = 8

_HEADER = struct.Struct("<4sIBB")


def tensor_to_bytes(array):
    arr = np.ascontiguousarray(array, dtype="<f4")
    if arr.ndim == 0 or arr.ndim > MAX_NDIM:
        raise InputValidationError("tensor rank must be in [1, %d], got %d" % (MAX_NDIM, arr.ndim))
    if arr.size == 0:
        raise InputValidationError("empty tensors are not supported")
    if not np.isfinite(arr).all():
        raise InputValidationError("tensor contains non-finite values")
    header = _HEADER.pack(MAGIC, VERSION, DTYPE_F32, arr.ndim)
    dims = struct.pack("<%dQ" % arr.ndim, *arr.shape)
    return header + dims + arr.tobytes(order="C")


def tensor_from_bytes(buf):
    if len(buf) < _HEADER.size:
        raise InputValidationError("tensor file truncated before header")
    magic, version, dtype, ndim = _HEADER.unpack_from(buf, 0)
    if magic != MAGIC:
        raise InputValidationError("bad magic %r, expected %r" % (magic, MAGIC))
    if version != VERSION:
        raise InputValidationError("unsupported tensor version %d" % version)
    if dtype != DTYPE_F32:
        raise InputValidationError("unsupported dtype code %d" % dtype)
    if not 1 <= ndim <= MAX_NDIM:
        raise InputValidationError("tensor rank %d outside [1, %d]" % (ndim, MAX_NDIM))
    dims_end = _HEADER.size + 8 * ndim
    if len(buf) < dims_end:
        raise InputValidationError("tensor file truncated in dims")
    dims = struct.unpack_from("<%dQ" % ndim, buf, _HEADER.size)
    expected = 4 * int(np.prod(dims))
    payload = buf[dims_end:]
    if len(payload) != expected:
        raise InputValidationError(
            "payload length %d does not match dims %s (expected %d)"
            % (len(payload), dims, expected)
        )
    return np.frombuffer(payload, dtype="<f4").reshape(dims).copy()


def write_tensor(path, array):
    atomic_write_bytes(path, tensor_to_bytes(array))


def read_tensor(path):
    with open(path, "rb") as f:
        return tensor_from_bytes(f.read())
