"""Camera models used to synthesize distorted line annotations.

Three models are supported.  Pinhole is a pass-through on pixel geometry.
Fisheye uses the polynomial equidistant mapping: with normalized radius
r = |p - c| / f the incidence angle is theta = atan(r), the distorted angle
theta_d = theta (1 + k1 theta^2 + k2 theta^4 + k3 theta^6 + k4 theta^8), and
the output pixel sits at radius f * theta_d along the same ray.  Spherical
images are equirectangular panoramas: pixel (u, v) maps to longitude
lambda = (u / width - 0.5) * 2 pi and latitude phi = (0.5 - v / height) * pi,
and straight 3D lines image to great-circle arcs.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from . import bezier
from .annotations import AnnotationSet, LineAnnotation
from .validation import (
    DegenerateInputError,
    InputValidationError,
    NumericalError,
    as_point_array,
    check_finite,
)

_MONOTONE_SAMPLES = 2048


@dataclass(frozen=True)
class PinholeCamera:
    fx: float
    fy: float
    cx: float
    cy: float

    def __post_init__(self):
        if self.fx <= 0 or self.fy <= 0:
            raise InputValidationError("focal lengths must be positive")


@dataclass(frozen=True)
class FisheyeCamera:
    """Polynomial equidistant fisheye intrinsics.

    ``theta_max`` bounds the half field of view; the distortion polynomial
    must be strictly increasing on [0, theta_max], which is checked here so
    the inverse mapping is well defined.
    """

    fx: float
    fy: float
    cx: float
    cy: float
    k: tuple = (0.0, 0.0, 0.0, 0.0)
    theta_max: float = math.pi / 2

    def __post_init__(self):
        if self.fx <= 0 or self.fy <= 0:
            raise InputValidationError("focal lengths must be positive")
        if len(self.k) != 4:
            raise InputValidationError("expected 4 distortion coefficients")
        object.__setattr__(self, "k", tuple(float(v) for v in self.k))
        if not (0 < self.theta_max <= math.pi / 2):
            raise InputValidationError("theta_max must lie in (0, pi/2]")
        theta = np.linspace(0.0, self.theta_max, _MONOTONE_SAMPLES)
        td = _distort_theta(theta, self.k)
        if not (np.diff(td) > 0.0).all():
            raise InputValidationError(
                "distortion polynomial is not strictly increasing on [0, theta_max]"
            )


@dataclass(frozen=True)
class SphericalCamera:
    """Equirectangular grid; width must be twice the height."""

    width: int
    height: int

    def __post_init__(self):
        if self.width != 2 * self.height or self.height <= 0:
            raise InputValidationError("equirectangular grid requires width == 2 * height")


def camera_from_json(obj):
    try:
        kind = obj["type"]
        if kind == "pinhole":
            return PinholeCamera(obj["fx"], obj["fy"], obj["cx"], obj["cy"])
        if kind == "fisheye":
            extra = {}
            if "theta_max" in obj:
                extra["theta_max"] = obj["theta_max"]
            return FisheyeCamera(
                obj["fx"], obj["fy"], obj["cx"], obj["cy"], k=tuple(obj["k"]), **extra
            )
        if kind == "spherical":
            return SphericalCamera(int(obj["width"]), int(obj["height"]))
    except (KeyError, TypeError) as exc:
        raise InputValidationError("malformed camera config: %s" % exc) from exc
    raise InputValidationError("unknown camera type %r" % kind)


def camera_to_json(cam):
    if isinstance(cam, PinholeCamera):
        return {"type": "pinhole", "fx": cam.fx, "fy": cam.fy, "cx": cam.cx, "cy": cam.cy}
    if isinstance(cam, FisheyeCamera):
        return {
            "type": "fisheye",
            "fx": cam.fx,
            "fy": cam.fy,
            "cx": cam.cx,
            "cy": cam.cy,
            "k": list(cam.k),
            "theta_max": cam.theta_max,
        }
    if isinstance(cam, SphericalCamera):
        return {"type": "spherical", "width": cam.width, "height": cam.height}
    raise InputValidationError("unknown camera %r" % (cam,))


def perturb_camera(cam, fraction, seed):
    """Scale each fisheye distortion coefficient by a uniform 1 +- fraction factor."""
    if not isinstance(cam, FisheyeCamera):
        return cam
    rng = np.random.default_rng(seed)
    factors = 1.0 + rng.uniform(-fraction, fraction, size=4)
    return FisheyeCamera(
        cam.fx, cam.fy, cam.cx, cam.cy,
        k=tuple(k * f for k, f in zip(cam.k, factors)),
        theta_max=cam.theta_max,
    )


def _distort_theta(theta, k):
    t2 = theta * theta
    return theta * (1.0 + t2 * (k[0] + t2 * (k[1] + t2 * (k[2] + t2 * k[3]))))


def _distort_theta_deriv(theta, k):
    t2 = theta * theta
    return 1.0 + t2 * (3 * k[0] + t2 * (5 * k[1] + t2 * (7 * k[2] + t2 * 9 * k[3])))


def fisheye_distort(points, cam, with_mask=False):
    """Map undistorted pinhole pixels into the fisheye image.

    With ``with_mask`` also returns a boolean validity array, false where the
    incidence angle exceeds ``cam.theta_max``.
    """
    pts = as_point_array(points, "points")
    xn = (pts[:, 0] - cam.cx) / cam.fx
    yn = (pts[:, 1] - cam.cy) / cam.fy
    r = np.hypot(xn, yn)
    theta = np.arctan(r)
    theta_d = _distort_theta(theta, cam.k)
    scale = np.ones_like(r)
    nz = r > 0.0
    scale[nz] = theta_d[nz] / r[nz]
    out = np.column_stack([cam.fx * xn * scale + cam.cx, cam.fy * yn * scale + cam.cy])
    if with_mask:
        return out, theta <= cam.theta_max
    return out


def fisheye_undistort(points, cam, tol=1e-12, max_iter=100):
    """Invert ``fisheye_distort`` by Newton iteration on the angle polynomial.

    Raises ``NumericalError`` if any point fails to reach a 1e-8 residual in
    the distorted angle within the iteration budget.
    """
    pts = as_point_array(points, "points")
    xd = (pts[:, 0] - cam.cx) / cam.fx
    yd = (pts[:, 1] - cam.cy) / cam.fy
    rd = np.hypot(xd, yd)
    theta = np.clip(rd.copy(), 0.0, cam.theta_max)
    for _ in range(max_iter):
        f = _distort_theta(theta, cam.k) - rd
        if np.abs(f).max() <= tol:
            break
        step = f / _distort_theta_deriv(theta, cam.k)
        theta = np.clip(theta - step, 0.0, cam.theta_max)
    residual = np.abs(_distort_theta(theta, cam.k) - rd)
    if residual.max() > 1e-8:
        raise NumericalError(
            "fisheye inverse did not converge: max residual %.3e after %d iterations"
            % (residual.max(), max_iter)
        )
    r = np.tan(theta)
    scale = np.ones_like(rd)
    nz = rd > 0.0
    scale[nz] = r[nz] / rd[nz]
    return np.column_stack([cam.fx * xd * scale + cam.cx, cam.fy * yd * scale + cam.cy])


def project_sphere_point(v, grid):
    """Project unit 3-vectors onto the equirectangular grid.

    Longitude comes from atan2(y, x), latitude from asin(z).  At the exact
    poles the longitude is undefined and u is fixed to width / 2.
    """
    vec = np.atleast_2d(check_finite(v, "v"))
    norms = np.linalg.norm(vec, axis=1)
    if np.abs(norms - 1.0).max() > 1e-9:
        raise InputValidationError("sphere points must be unit vectors")
    lon = np.arctan2(vec[:, 1], vec[:, 0])
    lat = np.arcsin(np.clip(vec[:, 2], -1.0, 1.0))
    u = (lon / (2 * math.pi) + 0.5) * grid.width
    u = np.where(u >= grid.width, u - grid.width, u)
    at_pole = np.hypot(vec[:, 0], vec[:, 1]) < 1e-12
    u = np.where(at_pole, grid.width / 2.0, u)
    vv = (0.5 - lat / math.pi) * grid.height
    out = np.column_stack([u, vv])
    return out[0] if np.ndim(v) == 1 else out


def unproject_sphere_point(p, grid):
    """Unit 3-vectors for equirectangular pixels, inverse of the projection."""
    pts = as_point_array(p, "p")
    lon = (pts[:, 0] / grid.width - 0.5) * 2 * math.pi
    lat = (0.5 - pts[:, 1] / grid.height) * math.pi
    cos_lat = np.cos(lat)
    vec = np.column_stack([cos_lat * np.cos(lon), cos_lat * np.sin(lon), np.sin(lat)])
    return vec[0] if np.ndim(p) == 1 else vec


def _slerp(a, b, ts):
    dot = float(np.clip(np.dot(a, b), -1.0, 1.0))
    omega = math.acos(dot)
    if omega < 1e-12:
        raise DegenerateInputError("arc endpoints coincide")
    if omega > math.pi - 1e-6:
        raise InputValidationError("antipodal endpoints leave the arc ambiguous")
    sin_omega = math.sin(omega)
    wa = np.sin((1.0 - ts) * omega) / sin_omega
    wb = np.sin(ts * omega) / sin_omega
    return wa[:, None] * a[None, :] + wb[:, None] * b[None, :]


def great_circle_segment(a, b, samples, grid):
    """Project the minor great-circle arc between two unit vectors.

    Returns a list of polylines: the arc is split wherever consecutive
    samples cross the longitude seam, so no output polyline contains a
    horizontal jump larger than half the image width.
    """
    if samples < 2:
        raise InputValidationError("need at least 2 samples")
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    for name, vec in (("a", a), ("b", b)):
        if abs(np.linalg.norm(vec) - 1.0) > 1e-9:
            raise InputValidationError("%s must be a unit vector" % name)
    ts = np.linspace(0.0, 1.0, samples)
    arc = _slerp(a, b, ts)
    arc /= np.linalg.norm(arc, axis=1, keepdims=True)
    pts = project_sphere_point(arc, grid)
    jumps = np.abs(np.diff(pts[:, 0])) > grid.width / 2.0
    splits = np.flatnonzero(jumps) + 1
    return [seg for seg in np.split(pts, splits) if len(seg) >= 1]


def _spherical_polyline_unwrapped(a, b, samples, grid):
    """Great-circle samples with continuous (unwrapped) horizontal coordinate."""
    ts = np.linspace(0.0, 1.0, samples)
    arc = _slerp(a, b, ts)
    arc /= np.linalg.norm(arc, axis=1, keepdims=True)
    lon = np.unwrap(np.arctan2(arc[:, 1], arc[:, 0]))
    lat = np.arcsin(np.clip(arc[:, 2], -1.0, 1.0))
    u = (lon / (2 * math.pi) + 0.5) * grid.width
    # keep the first sample inside [0, width) and let the rest stay continuous
    u -= math.floor(u[0] / grid.width) * grid.width
    v = (0.5 - lat / math.pi) * grid.height
    return np.column_stack([u, v])


@dataclass
class DistortedPolyline:
    """Sampled image of a straight segment under a camera's distortion."""

    points: np.ndarray
    visible: np.ndarray
    wrapped: bool = False

    @property
    def fully_visible(self):
        return bool(self.visible.all())

    @property
    def partially_visible(self):
        return bool(self.visible.any() and not self.visible.all())


def distort_segment(seg, cam, samples=64):
    """Distort a straight 2-point segment into a sampled polyline.

    Pinhole returns the uniform samples unchanged.  Fisheye maps each sample
    through the radial model.  Spherical treats the endpoints as
    equirectangular pixels of a straight 3D line and samples the great-circle
    arc between them, unwrapping across the seam so the polyline stays
    continuous; ``wrapped`` is set when any coordinate leaves [0, width).
    """
    endpoints = as_point_array(seg, "seg", min_points=2)
    if endpoints.shape[0] != 2:
        raise InputValidationError("seg must contain exactly two points")
    if samples < 2:
        raise InputValidationError("need at least 2 samples")
    ts = np.linspace(0.0, 1.0, samples)[:, None]
    straight = endpoints[0] * (1.0 - ts) + endpoints[1] * ts

    if isinstance(cam, PinholeCamera):
        return DistortedPolyline(straight, np.ones(samples, dtype=bool))
    if isinstance(cam, FisheyeCamera):
        pts, valid = fisheye_distort(straight, cam, with_mask=True)
        return DistortedPolyline(pts, valid)
    if isinstance(cam, SphericalCamera):
        a = unproject_sphere_point(endpoints[0], cam)
        b = unproject_sphere_point(endpoints[1], cam)
        pts = _spherical_polyline_unwrapped(a, b, samples, cam)
        wrapped = bool((pts[:, 0] < 0.0).any() or (pts[:, 0] >= cam.width).any())
        return DistortedPolyline(pts, np.ones(samples, dtype=bool), wrapped=wrapped)
    raise InputValidationError("unknown camera %r" % (cam,))


def distort_points(points, cam):
    """Map isolated points (junctions) through the camera's distortion."""
    pts = as_point_array(points, "points") if len(points) else np.zeros((0, 2))
    if len(pts) == 0 or isinstance(cam, (PinholeCamera, SphericalCamera)):
        # spherical annotations are already in panorama pixels
        return pts.copy(), np.ones(len(pts), dtype=bool)
    if isinstance(cam, FisheyeCamera):
        return fisheye_distort(pts, cam, with_mask=True)
    raise InputValidationError("unknown camera %r" % (cam,))


@dataclass
class SynthReport:
    lines_dropped: int = 0
    lines_partial: int = 0
    junctions_dropped: int = 0


def _in_rect(points, width, height, wrap_width=None):
    x = points[:, 0]
    if wrap_width is not None:
        x = np.mod(x, wrap_width)
    return (x >= 0.0) & (x <= width) & (points[:, 1] >= 0.0) & (points[:, 1] <= height)


def synth_annotation(ann, cam, order=2, samples=64, pin_endpoints=False):
    """Distort a straight-line annotation set and refit each line.

    Every input line must be order 1.  Each is sampled, pushed through the
    camera model, and fitted with an order-``order`` curve whose
    equipartition points become the output line.  ``pin_endpoints`` keeps
    the fitted endpoints exactly on the distorted segment endpoints, which
    keeps lines anchored to their mapped junctions.  Junctions are mapped
    point-wise.  Fully invisible lines and out-of-view junctions are dropped
    and counted in the returned report.
    """
    for line in ann.lines:
        if line.order != 1:
            raise InputValidationError("synthesis input lines must be order 1")
    wrap_width = cam.width if isinstance(cam, SphericalCamera) else None
    report = SynthReport()
    out_lines = []
    for line in ann.lines:
        dp = distort_segment(line.points, cam, samples=samples)
        visible = dp.visible & _in_rect(dp.points, ann.width, ann.height, wrap_width)
        if not visible.any():
            report.lines_dropped += 1
            continue
        if not visible.all():
            report.lines_partial += 1
        seg = bezier.fit_control_points(
            dp.points, order, params="uniform", pin_endpoints=pin_endpoints
        )
        eq = bezier.equipartition_points(seg, order + 1)
        out_lines.append(LineAnnotation(eq, wrapped=dp.wrapped))

    mapped, valid = distort_points(ann.junctions, cam)
    if len(mapped):
        keep = valid & _in_rect(mapped, ann.width, ann.height, wrap_width)
        report.junctions_dropped = int((~keep).sum())
        mapped = mapped[keep]

    out = AnnotationSet(
        ann.width, ann.height, mapped, out_lines, camera=camera_to_json(cam)
    )
    return out, report
