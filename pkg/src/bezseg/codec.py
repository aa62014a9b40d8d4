"""Grid-map ground-truth codec.

The image is divided into grid_h x grid_w bins.  A junction landing in a bin
sets that bin's confidence to 1 and stores the sub-bin offset
(bin_center - position) / bin_size, bounded by [-0.5, 0.5].  Lines store the
same confidence/offset pair for their center point (the curve value at
t = 0.5) plus the per-equipartition-point offsets from the center, in image
pixels.  For even orders the center coincides with the middle equipartition
point, so its zero offset is omitted and only n vectors are stored; odd
orders store all n+1.

Decoding inverts the construction: non-maximum suppression on the confidence
map, a confidence cutoff, top-K selection, then position reconstruction.
"""

from dataclasses import dataclass

import numpy as np

from . import bezier
from .annotations import Junction, LineProposal
from .validation import InputValidationError


@dataclass(frozen=True)
class GridSpec:
    """Image-to-grid geometry; image dims must be divisible by grid dims."""

    image_w: int
    image_h: int
    grid_w: int
    grid_h: int

    def __post_init__(self):
        if min(self.image_w, self.image_h, self.grid_w, self.grid_h) <= 0:
            raise InputValidationError("grid spec dimensions must be positive")
        if self.image_w % self.grid_w or self.image_h % self.grid_h:
            raise InputValidationError(
                "image dims (%d, %d) not divisible by grid dims (%d, %d)"
                % (self.image_w, self.image_h, self.grid_w, self.grid_h)
            )

    @property
    def sx(self):
        return self.image_w / self.grid_w

    @property
    def sy(self):
        return self.image_h / self.grid_h


@dataclass
class JunctionMaps:
    confidence: np.ndarray  # (grid_h, grid_w) in [0, 1]
    offsets: np.ndarray  # (grid_h, grid_w, 2), bin units in [-0.5, 0.5]
    collisions: int = 0


@dataclass
class LineMaps:
    center_confidence: np.ndarray  # (grid_h, grid_w)
    center_offsets: np.ndarray  # (grid_h, grid_w, 2), bin units
    eq_offsets: np.ndarray  # (grid_h, grid_w, 2m), image pixels
    order: int
    collisions: int = 0

    @property
    def stored_offsets(self):
        """m: number of stored offset vectors (n for even order, n+1 for odd)."""
        return self.order if self.order % 2 == 0 else self.order + 1


def _bin_of(point, spec):
    x, y = point
    if not (0.0 <= x <= spec.image_w and 0.0 <= y <= spec.image_h):
        raise InputValidationError(
            "position (%g, %g) outside image bounds %dx%d"
            % (x, y, spec.image_w, spec.image_h)
        )
    bx = min(int(x // spec.sx), spec.grid_w - 1)
    by = min(int(y // spec.sy), spec.grid_h - 1)
    return bx, by


def _bin_center(bx, by, spec):
    return np.array([(bx + 0.5) * spec.sx, (by + 0.5) * spec.sy])


def encode_junctions(junctions, spec):
    """Confidence and sub-bin offset maps for a list of junction positions.

    Two junctions in one bin keep the first in input order; the collision
    count is reported on the returned maps.
    """
    conf = np.zeros((spec.grid_h, spec.grid_w))
    offsets = np.zeros((spec.grid_h, spec.grid_w, 2))
    collisions = 0
    for p in np.atleast_2d(np.asarray(junctions, dtype=np.float64)) if len(junctions) else []:
        bx, by = _bin_of(p, spec)
        if conf[by, bx] == 1.0:
            collisions += 1
            continue
        conf[by, bx] = 1.0
        offsets[by, bx] = (_bin_center(bx, by, spec) - p) / (spec.sx, spec.sy)
    return JunctionMaps(conf, offsets, collisions)


def _line_center(points):
    points = np.asarray(points, dtype=np.float64)
    order = points.shape[0] - 1
    if order % 2 == 0:
        return points[order // 2]
    return bezier.evaluate(bezier.from_equipartition(points), 0.5)


def encode_lines(lines, spec, order):
    """Center confidence/offset maps plus equipartition offsets for lines.

    All lines must share ``order``.  The center is the curve point at
    t = 0.5; equipartition offsets are stored relative to it in image pixels
    so decoding is center + offset.  Center-bin collisions follow the same
    first-wins policy as junction encoding.
    """
    m = order if order % 2 == 0 else order + 1
    conf = np.zeros((spec.grid_h, spec.grid_w))
    center_off = np.zeros((spec.grid_h, spec.grid_w, 2))
    eq_off = np.zeros((spec.grid_h, spec.grid_w, 2 * m))
    collisions = 0
    for line in lines:
        points = np.asarray(line, dtype=np.float64)
        if points.shape[0] != order + 1:
            raise InputValidationError(
                "expected order-%d lines with %d points, got %d"
                % (order, order + 1, points.shape[0])
            )
        center = _line_center(points)
        bx, by = _bin_of(center, spec)
        if conf[by, bx] == 1.0:
            collisions += 1
            continue
        conf[by, bx] = 1.0
        center_off[by, bx] = (_bin_center(bx, by, spec) - center) / (spec.sx, spec.sy)
        rel = points - center
        if order % 2 == 0:
            rel = np.delete(rel, order // 2, axis=0)
        eq_off[by, bx] = rel.reshape(-1)
    return LineMaps(conf, center_off, eq_off, order, collisions)


def nms(confidence, window=3):
    """Keep bins that dominate their window; ties keep the smallest (row, col).

    A bin survives when its value is strictly greater than every
    lexicographically-smaller neighbor and at least as large as every
    lexicographically-larger one; suppressed bins are zeroed.
    """
    conf = np.asarray(confidence, dtype=np.float64)
    if conf.ndim != 2:
        raise InputValidationError("confidence map must be 2D")
    if window < 3 or window % 2 == 0:
        raise InputValidationError("window must be an odd integer >= 3")
    h, w = conf.shape
    r = window // 2
    keep = np.ones((h, w), dtype=bool)
    for dr in range(-r, r + 1):
        for dc in range(-r, r + 1):
            if dr == 0 and dc == 0:
                continue
            neighbor = np.full((h, w), -np.inf)
            i0, i1 = max(-dr, 0), min(h - dr, h)
            j0, j1 = max(-dc, 0), min(w - dc, w)
            if i0 < i1 and j0 < j1:
                neighbor[i0:i1, j0:j1] = conf[i0 + dr : i1 + dr, j0 + dc : j1 + dc]
            if dr > 0 or (dr == 0 and dc > 0):
                keep &= conf >= neighbor
            else:
                keep &= conf > neighbor
    return np.where(keep, conf, 0.0)


def _top_bins(conf, spec, top_k, min_conf, window):
    if top_k < 1:
        raise InputValidationError("top_k must be >= 1")
    if conf.shape != (spec.grid_h, spec.grid_w):
        raise InputValidationError(
            "map shape %s does not match grid (%d, %d)"
            % (conf.shape, spec.grid_h, spec.grid_w)
        )
    kept = nms(conf, window)
    flat = kept.reshape(-1)
    # stable sort keeps row-major order among equal confidences
    order = np.argsort(-flat, kind="stable")
    picked = []
    for idx in order:
        if flat[idx] <= min_conf:
            break
        picked.append(idx)
        if len(picked) == top_k:
            break
    rows, cols = np.unravel_index(picked, conf.shape) if picked else ((), ())
    return list(zip(rows, cols))


def decode_junctions(maps, spec, top_k=300, min_conf=0.008, window=3):
    """Junctions from confidence/offset maps: NMS, cutoff, top-K, reconstruct."""
    out = []
    for by, bx in _top_bins(maps.confidence, spec, top_k, min_conf, window):
        pos = _bin_center(bx, by, spec) - maps.offsets[by, bx] * (spec.sx, spec.sy)
        pos = np.clip(pos, 0.0, [spec.image_w, spec.image_h])
        out.append(Junction(pos, confidence=float(maps.confidence[by, bx])))
    return out


def decode_lines(maps, spec, top_k=300, min_conf=0.008, window=3):
    """Line proposals from center maps; inverts the line encoding."""
    n = maps.order
    out = []
    for by, bx in _top_bins(maps.center_confidence, spec, top_k, min_conf, window):
        center = _bin_center(bx, by, spec) - maps.center_offsets[by, bx] * (spec.sx, spec.sy)
        center = np.clip(center, 0.0, [spec.image_w, spec.image_h])
        rel = maps.eq_offsets[by, bx].reshape(-1, 2)
        points = center + rel
        if n % 2 == 0:
            points = np.insert(points, n // 2, center, axis=0)
        out.append(
            LineProposal(points, confidence=float(maps.center_confidence[by, bx]))
        )
    return out
