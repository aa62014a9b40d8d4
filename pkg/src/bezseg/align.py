"""Fixed-length feature extraction along curved lines.

A line given by its equipartition points is converted back to its curve,
sampled at n_points uniform parameters, and each sample is read from a dense
(C, H, W) feature map with bilinear interpolation.  A 1D max-pool with
window w along the point axis then yields C * n_points / w values,
concatenated channel-major.

Grid convention: image pixel (x, y) lands at grid coordinate
(x / sx - 0.5, y / sy - 0.5), so grid node g covers the pixel centered at
(g + 0.5) * s.  Samples outside the map are clamped to the border.
"""

import numpy as np

from . import bezier
from .validation import InputValidationError, check_finite


def _check_feature_map(feature_map):
    fm = np.asarray(feature_map, dtype=np.float64)
    if fm.ndim != 3 or min(fm.shape) < 1:
        raise InputValidationError("feature map must have shape (C, H, W)")
    check_finite(fm, "feature map")
    return fm


def bilinear_sample(feature_map, p):
    """Per-channel bilinear read at grid coordinate p = (x, y)."""
    fm = _check_feature_map(feature_map)
    return _bilinear_many(fm, np.asarray(p, dtype=np.float64).reshape(1, 2))[0]


def _bilinear_many(fm, pts):
    _, h, w = fm.shape
    x = np.clip(pts[:, 0], 0.0, w - 1.0)
    y = np.clip(pts[:, 1], 0.0, h - 1.0)
    x0 = np.floor(x).astype(int)
    y0 = np.floor(y).astype(int)
    x1 = np.minimum(x0 + 1, w - 1)
    y1 = np.minimum(y0 + 1, h - 1)
    wx = x - x0
    wy = y - y0
    top = fm[:, y0, x0] * (1.0 - wx) + fm[:, y0, x1] * wx
    bottom = fm[:, y1, x0] * (1.0 - wx) + fm[:, y1, x1] * wx
    return (top * (1.0 - wy) + bottom * wy).T  # (N, C)


def image_to_grid(points, spec):
    """Image-pixel coordinates to feature-grid coordinates."""
    pts = np.asarray(points, dtype=np.float64)
    return pts / (spec.sx, spec.sy) - 0.5


def bezier_align(feature_map, line, n_points=32, pool_window=4, spec=None):
    """Pooled feature vector for one line, length C * n_points / pool_window.

    ``line`` holds equipartition points, in image pixels when ``spec`` is
    given (they are mapped through the grid convention above) or directly in
    grid coordinates when ``spec`` is None.
    """
    fm = _check_feature_map(feature_map)
    if n_points < 2 or pool_window < 1 or n_points % pool_window:
        raise InputValidationError(
            "n_points (%r) must be >= 2 and divisible by pool_window (%r)"
            % (n_points, pool_window)
        )
    pts = np.asarray(line, dtype=np.float64)
    curve = bezier.from_equipartition(pts)
    ts = np.linspace(0.0, 1.0, n_points)
    samples = bezier.evaluate(curve, ts)
    if spec is not None:
        samples = image_to_grid(samples, spec)
    feats = _bilinear_many(fm, samples)  # (n_points, C)
    c = fm.shape[0]
    pooled = feats.reshape(n_points // pool_window, pool_window, c).max(axis=1)
    return pooled.T.reshape(-1)  # channel-major


def align_lines(feature_map, lines, n_points=32, pool_window=4, spec=None):
    """Stack of pooled feature vectors, one row per line."""
    rows = [
        bezier_align(feature_map, line, n_points=n_points, pool_window=pool_window, spec=spec)
        for line in lines
    ]
    c = np.asarray(feature_map).shape[0]
    if not rows:
        return np.zeros((0, c * (n_points // pool_window)))
    return np.stack(rows)
