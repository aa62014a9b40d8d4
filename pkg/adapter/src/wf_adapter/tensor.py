"""Export array-like data into the toolkit's binary tensor container."""

from pathlib import Path

from .formats import tensor_bytes


def export_tensor(array, path):
    """Write a numeric array (rank 1 to 4) as a float32 tensor file.

    The written bytes re-import bit-exactly for float32 input; other dtypes
    are converted to float32 first.  Raises AdapterError for non-numeric,
    empty, or over-rank input.
    """
    data = tensor_bytes(array)
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(data)
    return path
