"""Estimator-style wrappers so the toolkit composes with sklearn pipelines.

Each class is a thin stateful shell over the functional core: constructor
arguments are plain hyperparameters (visible to ``get_params`` and
``clone``), ``fit`` validates and stores learned or bound state on
trailing-underscore attributes, and ``transform``/``predict`` delegate to
the underlying functions.
"""

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from . import align as _align
from . import bezier as _bezier
from . import cameras as _cameras
from . import codec as _codec
from .validation import InputValidationError, as_point_array


class BezierCurveFitter(BaseEstimator):
    """Least-squares Bezier fit of a sampled 2D polyline.

    Parameters
    ----------
    order : int, curve order in [1, 6].
    parameterization : "uniform" or "chord", the parameter assignment of the
        samples along the curve.
    pin_endpoints : bool, constrain the first and last control points to the
        first and last samples.

    Attributes
    ----------
    control_points_ : ndarray of shape (order + 1, 2)
    report_ : FitReport with mean, max, and per-point fit distances.
    """

    def __init__(self, order=2, parameterization="uniform", pin_endpoints=False):
        self.order = order
        self.parameterization = parameterization
        self.pin_endpoints = pin_endpoints

    def fit(self, X, y=None):
        points = as_point_array(X, "X", min_points=2)
        segment = _bezier.fit_control_points(
            points, self.order, params=self.parameterization,
            pin_endpoints=self.pin_endpoints,
        )
        self.control_points_ = segment.control_points
        self.segment_ = segment
        self.report_ = _bezier.fitting_error(segment, points, params=self.parameterization)
        return self

    def predict(self, T):
        check_is_fitted(self, "segment_")
        return _bezier.evaluate(self.segment_, np.asarray(T, dtype=np.float64))

    def score(self, X, y=None):
        """Negative mean fit distance against a polyline (higher is better)."""
        check_is_fitted(self, "segment_")
        points = as_point_array(X, "X", min_points=2)
        report = _bezier.fitting_error(self.segment_, points, params=self.parameterization)
        return -report.mean_error


class AnnotationDistorter(BaseEstimator, TransformerMixin):
    """Distort straight-line annotation sets through a camera model.

    ``camera`` is a camera instance or its JSON dict; order and samples
    control the refit of each distorted line.  ``transform`` accepts one
    AnnotationSet or a list of them and the synthesis report of the last
    call is kept on ``last_report_``.
    """

    def __init__(self, camera=None, order=2, samples=64):
        self.camera = camera
        self.order = order
        self.samples = samples

    def fit(self, X=None, y=None):
        return self

    def _camera(self):
        if self.camera is None:
            raise InputValidationError("AnnotationDistorter requires a camera")
        if isinstance(self.camera, dict):
            return _cameras.camera_from_json(self.camera)
        return self.camera

    def transform(self, X):
        cam = self._camera()
        single = not isinstance(X, (list, tuple))
        sets = [X] if single else list(X)
        out = []
        reports = []
        for ann in sets:
            distorted, report = _cameras.synth_annotation(
                ann, cam, order=self.order, samples=self.samples
            )
            out.append(distorted)
            reports.append(report)
        self.last_report_ = reports[0] if single else reports
        return out[0] if single else out


class GridMapEncoder(BaseEstimator, TransformerMixin):
    """Encode annotation sets into grid maps and decode maps back.

    ``transform`` turns an AnnotationSet into (JunctionMaps, LineMaps);
    ``inverse_transform`` turns such a pair back into (junctions, line
    proposals) using the configured top-K and confidence cutoff.
    """

    def __init__(self, image_w=512, image_h=512, grid_w=128, grid_h=128,
                 order=1, top_k=300, min_conf=0.008, nms_window=3):
        self.image_w = image_w
        self.image_h = image_h
        self.grid_w = grid_w
        self.grid_h = grid_h
        self.order = order
        self.top_k = top_k
        self.min_conf = min_conf
        self.nms_window = nms_window

    def _spec(self):
        return _codec.GridSpec(self.image_w, self.image_h, self.grid_w, self.grid_h)

    def fit(self, X=None, y=None):
        return self

    def transform(self, X):
        spec = self._spec()
        junction_maps = _codec.encode_junctions(X.junctions, spec)
        line_maps = _codec.encode_lines(
            [l.points for l in X.lines], spec, self.order
        )
        return junction_maps, line_maps

    def inverse_transform(self, maps):
        junction_maps, line_maps = maps
        spec = self._spec()
        junctions = _codec.decode_junctions(
            junction_maps, spec, top_k=self.top_k, min_conf=self.min_conf,
            window=self.nms_window,
        )
        lines = _codec.decode_lines(
            line_maps, spec, top_k=self.top_k, min_conf=self.min_conf,
            window=self.nms_window,
        )
        return junctions, lines


class BezierAligner(BaseEstimator, TransformerMixin):
    """Pool fixed-length feature vectors for lines from a dense feature map.

    ``fit`` binds the (C, H, W) feature map; when image dimensions are given
    the lines passed to ``transform`` are interpreted in image pixels,
    otherwise directly in grid coordinates.
    """

    def __init__(self, n_points=32, pool_window=4, image_w=None, image_h=None):
        self.n_points = n_points
        self.pool_window = pool_window
        self.image_w = image_w
        self.image_h = image_h

    def fit(self, X, y=None):
        fm = np.asarray(X, dtype=np.float64)
        if fm.ndim != 3:
            raise InputValidationError("feature map must have shape (C, H, W)")
        self.feature_map_ = fm
        if (self.image_w is None) != (self.image_h is None):
            raise InputValidationError("give both image dimensions or neither")
        if self.image_w is not None:
            self.spec_ = _codec.GridSpec(
                self.image_w, self.image_h, fm.shape[2], fm.shape[1]
            )
        else:
            self.spec_ = None
        return self

    def transform(self, X):
        check_is_fitted(self, "feature_map_")
        return _align.align_lines(
            self.feature_map_, X, n_points=self.n_points,
            pool_window=self.pool_window, spec=self.spec_,
        )
