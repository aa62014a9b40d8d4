"""Bezier curve core.

A curve of order n is B(t) = sum_i b_i * C(n,i) t^i (1-t)^(n-i) over t in
[0, 1], with n+1 control points b_i.  Since control points of a curved line
have little geometric meaning (and may fall outside the image), curves are
interchangeably represented by their n+1 equipartition points, the curve
values at t = k/n.  The two representations are bijective: stacking basis
rows at the uniform parameters gives a square linear system, and sampling
more points than n+1 turns the same system into a least-squares fit.
"""

from dataclasses import dataclass
from math import comb

import numpy as np

from .validation import (
    DegenerateInputError,
    InputValidationError,
    as_point_array,
    check_unit_interval,
)

MAX_ORDER = 6

PARAM_MODES = ("uniform", "chord")


@dataclass(frozen=True)
class BezierSegment:
    """A single Bezier curve: ``order + 1`` control points, shape (n+1, 2)."""

    order: int
    control_points: np.ndarray

    def __post_init__(self):
        if not 1 <= self.order <= MAX_ORDER:
            raise InputValidationError(
                "order must be in [1, %d], got %r" % (MAX_ORDER, self.order)
            )
        pts = as_point_array(self.control_points, "control_points")
        if pts.shape[0] != self.order + 1:
            raise InputValidationError(
                "order-%d curve needs %d control points, got %d"
                % (self.order, self.order + 1, pts.shape[0])
            )
        object.__setattr__(self, "control_points", pts)


@dataclass(frozen=True)
class FitReport:
    """Per-point fit distances of a curve against a reference polyline."""

    mean_error: float
    max_error: float
    per_point_errors: np.ndarray

    def __post_init__(self):
        if not 0.0 <= self.mean_error <= self.max_error + 1e-15:
            raise InputValidationError("fit report requires 0 <= mean <= max")


def bernstein_basis(i, n, t):
    """Bernstein polynomial C(n,i) t^i (1-t)^(n-i); t may be an array."""
    if not 0 <= i <= n:
        raise InputValidationError("basis index i=%r outside [0, %r]" % (i, n))
    t = check_unit_interval(t)
    return comb(n, i) * t**i * (1.0 - t) ** (n - i)


def interpolation_matrix(order, ts):
    """Basis matrix with entry (j, i) = B_{i,order}(ts[j]); rows sum to 1."""
    ts = np.atleast_1d(check_unit_interval(ts, "ts"))
    if ts.size == 0:
        raise InputValidationError("ts must contain at least one parameter")
    cols = [bernstein_basis(i, order, ts) for i in range(order + 1)]
    return np.stack(cols, axis=1)


def evaluate(curve, t):
    """Curve point(s) at parameter t; scalar t gives (2,), array t gives (m, 2)."""
    t_arr = np.atleast_1d(check_unit_interval(t))
    pts = interpolation_matrix(curve.order, t_arr) @ curve.control_points
    if np.isscalar(t) or np.ndim(t) == 0:
        return pts[0]
    return pts


def equipartition_points(curve, count):
    """Sample the curve at count uniform parameters k/(count-1)."""
    if count < 2:
        raise InputValidationError("count must be >= 2, got %r" % count)
    ts = np.linspace(0.0, 1.0, count)
    return interpolation_matrix(curve.order, ts) @ curve.control_points


def from_equipartition(points):
    """Recover the order-(N-1) curve whose uniform samples are the given points.

    Solves the square interpolation system exactly, so
    ``equipartition_points(from_equipartition(p), len(p))`` reproduces ``p``.
    """
    pts = as_point_array(points, "points", min_points=2)
    order = pts.shape[0] - 1
    if order > MAX_ORDER:
        raise InputValidationError(
            "point count %d implies order %d > max %d"
            % (pts.shape[0], order, MAX_ORDER)
        )
    ts = np.linspace(0.0, 1.0, order + 1)
    basis = interpolation_matrix(order, ts)
    controls = np.linalg.solve(basis, pts)
    return BezierSegment(order, controls)


def chord_length_params(samples):
    """Cumulative chord-length parameters normalized to [0, 1]."""
    pts = as_point_array(samples, "samples", min_points=2)
    seg_len = np.linalg.norm(np.diff(pts, axis=0), axis=1)
    total = seg_len.sum()
    if total <= 0.0:
        raise DegenerateInputError("all samples coincide, chord length undefined")
    ts = np.concatenate([[0.0], np.cumsum(seg_len)]) / total
    return np.clip(ts, 0.0, 1.0)


def _parameters_for(samples, params):
    if params == "uniform":
        return np.linspace(0.0, 1.0, len(samples))
    if params == "chord":
        return chord_length_params(samples)
    raise InputValidationError(
        "params must be one of %s, got %r" % (PARAM_MODES, params)
    )


def fit_control_points(samples, order, params="uniform", pin_endpoints=False):
    """Least-squares control points for the samples at the chosen parameters.

    ``params`` selects the parameter assignment: "uniform" spaces t evenly,
    "chord" uses normalized cumulative chord length.  ``pin_endpoints``
    constrains b_0 and b_n to the first and last samples and solves only for
    the interior control points.
    """
    pts = as_point_array(samples, "samples", min_points=2)
    if not 1 <= order <= MAX_ORDER:
        raise InputValidationError("order must be in [1, %d]" % MAX_ORDER)
    if pts.shape[0] < order + 1:
        raise InputValidationError(
            "need at least %d samples for an order-%d fit, got %d"
            % (order + 1, order, pts.shape[0])
        )
    if np.allclose(pts, pts[0], atol=0.0):
        raise DegenerateInputError("all samples coincide")
    ts = _parameters_for(pts, params)
    basis = interpolation_matrix(order, ts)

    if pin_endpoints:
        if order == 1:
            return BezierSegment(1, np.stack([pts[0], pts[-1]]))
        target = pts - np.outer(basis[:, 0], pts[0]) - np.outer(basis[:, -1], pts[-1])
        interior, _, rank, _ = np.linalg.lstsq(basis[:, 1:-1], target, rcond=None)
        if rank < order - 1:
            raise DegenerateInputError("design matrix is rank deficient")
        controls = np.vstack([pts[0], interior, pts[-1]])
        return BezierSegment(order, controls)

    controls, _, rank, _ = np.linalg.lstsq(basis, pts, rcond=None)
    if rank < order + 1:
        raise DegenerateInputError("design matrix is rank deficient")
    return BezierSegment(order, controls)


def fitting_error(curve, reference, params="uniform"):
    """Distances between curve samples and a reference polyline.

    Point j of the reference is compared against the curve at the parameter
    assigned to it by ``params``, the same assignment used when fitting.
    """
    ref = as_point_array(reference, "reference", min_points=2)
    ts = _parameters_for(ref, params)
    on_curve = interpolation_matrix(curve.order, ts) @ curve.control_points
    dists = np.linalg.norm(on_curve - ref, axis=1)
    return FitReport(float(dists.mean()), float(dists.max()), dists)
