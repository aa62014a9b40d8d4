"""Detection metrics: structural AP for lines, junction AP, PR curves.

Coordinates are rescaled per image so the longer side equals 128 before
distances are taken, matching the scale at which the distance thresholds are
defined.  Line matching is greedy in descending confidence: a prediction is
a true positive when some still-unmatched ground-truth line of its image
lies within the squared-distance threshold, and that line is then consumed.
AP is the area under the precision envelope of the resulting PR sequence.

For spherical panoramas a prediction may also match after shifting all its
points horizontally by one image period, which reconciles lines annotated on
either side of the seam.
"""

from dataclasses import dataclass, field

import numpy as np

from .fileutil import atomic_write_text
from .proposals import structural_distance_matrix
from .validation import InputValidationError

EVAL_MAX_DIM = 128.0
SAP_THRESHOLDS = (5.0, 10.0, 15.0)
JUNCTION_THRESHOLDS = (0.5, 1.0, 2.0)


@dataclass
class EvalReport:
    sap: dict
    msap: float
    map_j: float
    pr_curves: dict = field(default_factory=dict)

    def to_json_obj(self):
        return {
            "sap": {("%g" % t): v for t, v in self.sap.items()},
            "msap": self.msap,
            "map_j": self.map_j,
            "pr_curves": {
                ("%g" % t): [[float(r), float(p)] for r, p in pts]
                for t, pts in self.pr_curves.items()
            },
        }


def pr_points(matches, total_gt):
    """Cumulative (recall, precision) after each prediction, best first."""
    matches = np.asarray(matches, dtype=bool)
    tp = np.cumsum(matches)
    fp = np.cumsum(~matches)
    denom = max(total_gt, 1)
    recall = tp / denom
    precision = tp / np.maximum(tp + fp, 1)
    return list(zip(recall.tolist(), precision.tolist()))


def average_precision(pr):
    """Area under the monotone precision envelope of a PR sequence."""
    if not pr:
        return 0.0
    recall = np.concatenate([[0.0], [p[0] for p in pr]])
    precision = np.concatenate([[0.0], [p[1] for p in pr]])
    for i in range(precision.size - 2, -1, -1):
        precision[i] = max(precision[i], precision[i + 1])
    # sequential accumulation keeps the value independent of numpy's
    # pairwise-summation blocking
    ap = 0.0
    for i in range(1, recall.size):
        if recall[i] != recall[i - 1]:
            ap += (recall[i] - recall[i - 1]) * precision[i]
    return float(ap)


def _scale_for(size, scale_max_dim):
    w, h = size
    return scale_max_dim / float(max(w, h))


def _greedy_line_matches(pred_lines, gt_lines, image_sizes, threshold, wrap, scale_max_dim):
    """Confidence-ordered TP flags over all images plus the GT total."""
    entries = []  # (confidence, seq, image, local index)
    seq = 0
    for name in sorted(pred_lines):
        for i, prop in enumerate(pred_lines[name]):
            entries.append((-prop.confidence, seq, name, i))
            seq += 1
    entries.sort()

    total_gt = sum(len(v) for v in gt_lines.values())
    dists = {}
    for name, props in pred_lines.items():
        gts = gt_lines.get(name, [])
        if not props or not gts:
            continue
        scale = _scale_for(image_sizes[name], scale_max_dim)
        pred = np.stack([p.points for p in props]) * scale
        gt = np.stack([np.asarray(g, dtype=np.float64) for g in gts]) * scale
        if pred.shape[1:] != gt.shape[1:]:
            raise InputValidationError(
                "prediction and ground-truth line orders differ for image %r" % name
            )
        wrap_width = image_sizes[name][0] * scale if wrap else None
        dists[name] = structural_distance_matrix(pred, gt, wrap_width=wrap_width)

    consumed = {name: np.zeros(len(v), dtype=bool) for name, v in gt_lines.items()}
    matches = []
    for _, _, name, i in entries:
        hit = False
        if name in dists:
            row = dists[name][i]
            free = ~consumed[name]
            if free.any():
                masked = np.where(free, row, np.inf)
                gi = int(masked.argmin())
                if masked[gi] < threshold:
                    consumed[name][gi] = True
                    hit = True
        matches.append(hit)
    return matches, total_gt


def sap(pred_lines, gt_lines, image_sizes, threshold, wrap=False, scale_max_dim=EVAL_MAX_DIM):
    """Structural AP at one squared-distance threshold, plus its PR points.

    ``pred_lines`` maps image name to LineProposal lists, ``gt_lines`` to
    equipartition point arrays, ``image_sizes`` to (width, height).  An empty
    ground truth with predictions scores 0; empty on both sides scores 1.
    """
    matches, total_gt = _greedy_line_matches(
        pred_lines, gt_lines, image_sizes, threshold, wrap, scale_max_dim
    )
    if total_gt == 0:
        return (1.0 if not matches else 0.0), []
    if not matches:
        return 0.0, []
    pr = pr_points(matches, total_gt)
    return average_precision(pr), pr


def msap(pred_lines, gt_lines, image_sizes, thresholds=SAP_THRESHOLDS, wrap=False,
         scale_max_dim=EVAL_MAX_DIM):
    """Mean structural AP over the standard thresholds."""
    values = [
        sap(pred_lines, gt_lines, image_sizes, t, wrap=wrap, scale_max_dim=scale_max_dim)[0]
        for t in thresholds
    ]
    return float(np.mean(values))


def _greedy_junction_matches(pred_junctions, gt_junctions, image_sizes, threshold,
                             scale_max_dim):
    entries = []
    seq = 0
    for name in sorted(pred_junctions):
        for i, j in enumerate(pred_junctions[name]):
            entries.append((-j.confidence, seq, name, i))
            seq += 1
    entries.sort()
    total_gt = sum(len(v) for v in gt_junctions.values())

    dists = {}
    for name, preds in pred_junctions.items():
        gts = gt_junctions.get(name)
        if not preds or gts is None or len(gts) == 0:
            continue
        scale = _scale_for(image_sizes[name], scale_max_dim)
        p = np.stack([j.position for j in preds]) * scale
        g = np.asarray(gts, dtype=np.float64) * scale
        dists[name] = np.linalg.norm(p[:, None] - g[None], axis=2)

    consumed = {name: np.zeros(len(v), dtype=bool) for name, v in gt_junctions.items()}
    matches = []
    for _, _, name, i in entries:
        hit = False
        if name in dists:
            row = np.where(~consumed[name], dists[name][i], np.inf)
            gi = int(row.argmin())
            if row[gi] < threshold:
                consumed[name][gi] = True
                hit = True
        matches.append(hit)
    return matches, total_gt


def junction_map(pred_junctions, gt_junctions, image_sizes,
                 thresholds=JUNCTION_THRESHOLDS, scale_max_dim=EVAL_MAX_DIM):
    """Mean junction AP under Euclidean matching at the given thresholds."""
    aps = []
    for t in thresholds:
        matches, total_gt = _greedy_junction_matches(
            pred_junctions, gt_junctions, image_sizes, t, scale_max_dim
        )
        if total_gt == 0:
            aps.append(1.0 if not matches else 0.0)
        elif not matches:
            aps.append(0.0)
        else:
            aps.append(average_precision(pr_points(matches, total_gt)))
    return float(np.mean(aps))


def evaluate_predictions(predictions, ground_truth, dataset_type="pinhole",
                         thresholds=SAP_THRESHOLDS, scale_max_dim=EVAL_MAX_DIM):
    """Full evaluation of a prediction set against per-image annotations.

    ``predictions`` maps image name to ImagePredictions; ``ground_truth``
    maps the same names to AnnotationSets.  The image sets must agree.
    """
    missing = sorted(set(ground_truth) - set(predictions))
    extra = sorted(set(predictions) - set(ground_truth))
    if missing or extra:
        raise InputValidationError(
            "image sets differ; missing from predictions: %s; unknown: %s"
            % (missing, extra)
        )
    wrap = dataset_type == "spherical"
    pred_lines = {name: p.lines for name, p in predictions.items()}
    pred_junctions = {name: p.junctions for name, p in predictions.items()}
    gt_lines = {name: [l.points for l in ann.lines] for name, ann in ground_truth.items()}
    gt_junctions = {name: ann.junctions for name, ann in ground_truth.items()}
    image_sizes = {name: (ann.width, ann.height) for name, ann in ground_truth.items()}

    sap_values = {}
    pr_curves = {}
    for t in thresholds:
        ap, pr = sap(pred_lines, gt_lines, image_sizes, t, wrap=wrap,
                     scale_max_dim=scale_max_dim)
        sap_values[t] = ap
        pr_curves[t] = pr
    report = EvalReport(
        sap=sap_values,
        msap=float(np.mean(list(sap_values.values()))),
        map_j=junction_map(pred_junctions, gt_junctions, image_sizes,
                           scale_max_dim=scale_max_dim),
        pr_curves=pr_curves,
    )
    return report


def pr_curves_csv(report):
    lines = ["threshold,recall,precision"]
    for t in sorted(report.pr_curves):
        for r, p in report.pr_curves[t]:
            lines.append("%g,%.9g,%.9g" % (t, r, p))
    return "\n".join(lines) + "\n"


def pr_curves_svg(report, width=640, height=480, margin=56):
    """Minimal standalone SVG with one PR polyline per threshold."""
    colors = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e")
    plot_w = width - 2 * margin
    plot_h = height - 2 * margin

    def sx(r):
        return margin + r * plot_w

    def sy(p):
        return height - margin - p * plot_h

    parts = [
        '<svg xmlns="http://www.w3.org/2000/svg" width="%d" height="%d">' % (width, height),
        '<rect width="%d" height="%d" fill="white"/>' % (width, height),
        '<rect x="%d" y="%d" width="%d" height="%d" fill="none" stroke="black"/>'
        % (margin, margin, plot_w, plot_h),
        '<text x="%d" y="%d" font-size="13" text-anchor="middle">recall</text>'
        % (width // 2, height - margin // 3),
        '<text x="%d" y="%d" font-size="13" text-anchor="middle" '
        'transform="rotate(-90 %d %d)">precision</text>'
        % (margin // 3, height // 2, margin // 3, height // 2),
    ]
    for tick in (0.0, 0.25, 0.5, 0.75, 1.0):
        parts.append(
            '<text x="%.1f" y="%d" font-size="11" text-anchor="middle">%.2f</text>'
            % (sx(tick), height - margin + 16, tick)
        )
        parts.append(
            '<text x="%d" y="%.1f" font-size="11" text-anchor="end">%.2f</text>'
            % (margin - 6, sy(tick) + 4, tick)
        )
    for idx, t in enumerate(sorted(report.pr_curves)):
        pts = report.pr_curves[t]
        if not pts:
            continue
        coords = " ".join("%.2f,%.2f" % (sx(r), sy(p)) for r, p in pts)
        color = colors[idx % len(colors)]
        parts.append(
            '<polyline points="%s" fill="none" stroke="%s" stroke-width="1.5"/>'
            % (coords, color)
        )
        parts.append(
            '<text x="%d" y="%d" font-size="12" fill="%s">threshold %g (AP %.3f)</text>'
            % (margin + 8, margin + 18 + 16 * idx, color, t, report.sap.get(t, 0.0))
        )
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def write_report(out_dir, report):
    from pathlib import Path

    from .fileutil import canonical_json

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    atomic_write_text(out / "report.json", canonical_json(report.to_json_obj()))
    atomic_write_text(out / "pr_curves.csv", pr_curves_csv(report))
    atomic_write_text(out / "pr_curves.svg", pr_curves_svg(report))
