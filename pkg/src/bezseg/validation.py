"""Input validation helpers shared across the package."""

import numpy as np


class InputValidationError(ValueError):
    """Caller-supplied data violates a documented precondition."""


class DegenerateInputError(InputValidationError):
    """Input is structurally valid but geometrically degenerate."""


class NumericalError(RuntimeError):
    """An iterative numerical routine failed to reach its tolerance."""


def as_point_array(points, name="points", min_points=1):
    """Coerce to a finite float64 array of shape (N, 2)."""
    arr = np.asarray(points, dtype=np.float64)
    if arr.ndim == 1 and arr.size == 2:
        arr = arr.reshape(1, 2)
    if arr.ndim != 2 or arr.shape[1] != 2:
        raise InputValidationError(
            "%s must have shape (N, 2), got %s" % (name, (arr.shape,))
        )
    if arr.shape[0] < min_points:
        raise InputValidationError(
            "%s needs at least %d points, got %d" % (name, min_points, arr.shape[0])
        )
    if not np.isfinite(arr).all():
        raise InputValidationError("%s contains non-finite values" % name)
    return arr


def check_finite(arr, name="array"):
    arr = np.asarray(arr, dtype=np.float64)
    if not np.isfinite(arr).all():
        raise InputValidationError("%s contains non-finite values" % name)
    return arr


def check_unit_interval(t, name="t"):
    t = np.asarray(t, dtype=np.float64)
    if not np.isfinite(t).all():
        raise InputValidationError("%s contains non-finite values" % name)
    if (t < 0.0).any() or (t > 1.0).any():
        raise InputValidationError("%s must lie in [0, 1]" % name)
    return t
