"""Bezier-curve line segment toolkit.

Curve math, distortion-aware annotation synthesis, grid-map ground-truth
codecs, proposal matching, reference losses, and structural-AP evaluation,
with sklearn-style estimator wrappers and a CLI over bit-exact file formats.
"""

from .align import bezier_align, bilinear_sample
from .annotations import (
    AnnotationSet,
    ImagePredictions,
    Junction,
    LineAnnotation,
    LineProposal,
    load_annotation,
    save_annotation,
)
from .bezier import (
    BezierSegment,
    FitReport,
    bernstein_basis,
    equipartition_points,
    evaluate,
    fit_control_points,
    fitting_error,
    from_equipartition,
    interpolation_matrix,
)
from .cameras import (
    FisheyeCamera,
    PinholeCamera,
    SphericalCamera,
    distort_segment,
    fisheye_distort,
    fisheye_undistort,
    great_circle_segment,
    project_sphere_point,
    synth_annotation,
    unproject_sphere_point,
)
from .codec import (
    GridSpec,
    JunctionMaps,
    LineMaps,
    decode_junctions,
    decode_lines,
    encode_junctions,
    encode_lines,
    nms,
)
from .estimators import (
    AnnotationDistorter,
    BezierAligner,
    BezierCurveFitter,
    GridMapEncoder,
)
from .losses import LossReport, LossWeights, bce, cls_loss, junction_loss, line_loss, smooth_l1, total_loss
from .metrics import EvalReport, evaluate_predictions, junction_map, msap, pr_points, sap
from .proposals import (
    LabeledSample,
    MatchedLine,
    match_lines_junctions,
    sample_training_lines,
    structural_distance,
)
from .tensorio import read_tensor, write_tensor
from .validation import DegenerateInputError, InputValidationError, NumericalError

__version__ = "0.1.0"
