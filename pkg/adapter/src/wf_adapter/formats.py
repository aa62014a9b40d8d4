"""Target file formats of the line-segment toolkit, written independently.

The adapter produces the toolkit's annotation JSON and binary tensor
container from their published layouts; it never imports the toolkit, so
these definitions are the single point of coupling.

Annotation document:

    {"image": {"width": W, "height": H},
     "junctions": [[x, y], ...],
     "lines": [{"order": 1, "points": [[x, y], [x, y]]}, ...]}

written with sorted keys, two-space indent, a trailing newline, and all
coordinates rounded to float32.

Tensor container, little-endian: magic b"ULTD", u32 version 1, u8 dtype
(0 = float32), u8 ndim, ndim x u64 dims, then the row-major float32 payload.
"""

import json
import struct

import numpy as np


class AdapterError(ValueError):
    pass


def f32(value):
    return float(np.float32(value))


def annotation_document(width, height, junctions, lines):
    return {
        "image": {"width": int(width), "height": int(height)},
        "junctions": [[f32(x), f32(y)] for x, y in junctions],
        "lines": [
            {"order": 1, "points": [[f32(x1), f32(y1)], [f32(x2), f32(y2)]]}
            for (x1, y1), (x2, y2) in lines
        ],
    }


def dump_json(obj):
    return json.dumps(obj, sort_keys=True, indent=2, separators=(",", ": ")) + "\n"


TENSOR_MAGIC = b"ULTD"
TENSOR_VERSION = 1
TENSOR_DTYPE_F32 = 0
MAX_EXPORT_NDIM = 4


def tensor_bytes(array):
    try:
        arr = np.ascontiguousarray(array, dtype="<f4")
    except (TypeError, ValueError) as exc:
        raise AdapterError("array is not numeric: %s" % exc) from exc
    if arr.ndim == 0 or arr.ndim > MAX_EXPORT_NDIM:
        raise AdapterError("tensor rank must be in [1, %d], got %d" % (MAX_EXPORT_NDIM, arr.ndim))
    if arr.size == 0:
        raise AdapterError("refusing to export an empty tensor")
    if not np.isfinite(arr).all():
        raise AdapterError("tensor contains non-finite values")
    header = struct.pack("<4sIBB", TENSOR_MAGIC, TENSOR_VERSION, TENSOR_DTYPE_F32, arr.ndim)
    dims = struct.pack("<%dQ" % arr.ndim, *arr.shape)
    return header + dims + arr.tobytes(order="C")
