"""Proposal refinement: structural distance, junction matching, sample selection."""

from dataclasses import dataclass

import numpy as np

from .validation import InputValidationError

POSITIVE = "positive"
NEGATIVE = "negative"


def structural_distance(l, l2):
    """Orientation-minimized sum of squared distances between point lists.

    Both lines must carry the same number of points; the reversed ordering of
    the second line is also tried and the smaller sum wins, making the
    distance invariant to line direction.
    """
    a = np.asarray(l, dtype=np.float64)
    b = np.asarray(l2, dtype=np.float64)
    if a.shape != b.shape:
        raise InputValidationError(
            "line orders differ: %s vs %s" % (a.shape, b.shape)
        )
    forward = ((a - b) ** 2).sum()
    backward = ((a - b[::-1]) ** 2).sum()
    return float(min(forward, backward))


def structural_distance_matrix(pred, gt, wrap_width=None):
    """Pairwise structural distances, shape (P, G).

    ``wrap_width`` additionally tries both horizontal shifts of the
    predictions by one image period, for panoramas whose lines may be
    annotated on either side of the seam.
    """
    pred = np.asarray(pred, dtype=np.float64)
    gt = np.asarray(gt, dtype=np.float64)
    if pred.ndim != 3 or gt.ndim != 3 or pred.shape[1:] != gt.shape[1:]:
        raise InputValidationError("expected matching (N, n+1, 2) line stacks")

    def both_orientations(p):
        diff_f = ((p[:, None] - gt[None]) ** 2).sum(axis=(2, 3))
        diff_b = ((p[:, None] - gt[None, :, ::-1]) ** 2).sum(axis=(2, 3))
        return np.minimum(diff_f, diff_b)

    dist = both_orientations(pred)
    if wrap_width is not None:
        for shift in (wrap_width, -wrap_width):
            shifted = pred.copy()
            shifted[:, :, 0] += shift
            dist = np.minimum(dist, both_orientations(shifted))
    return dist


@dataclass
class MatchedLine:
    """A proposal whose endpoints were snapped to junction detections."""

    points: np.ndarray
    junction_ids: tuple
    match_cost: float
    confidence: float = 1.0


def match_lines_junctions(proposals, junctions, radius):
    """Keep proposals whose endpoints match two distinct nearby junctions.

    Each endpoint takes its nearest junction within ``radius``; proposals
    with an unmatched endpoint, or both endpoints on one junction, are
    dropped.  When several proposals land on the same junction pair only the
    cheapest match survives.  Matched endpoints are replaced by the junction
    positions and interior points are shifted by the linear interpolation of
    the two endpoint corrections, preserving the curve shape.
    """
    if radius <= 0:
        raise InputValidationError("radius must be positive")
    if not proposals or not junctions:
        return []
    jpos = np.stack([j.position for j in junctions])
    best = {}
    for idx, prop in enumerate(proposals):
        pts = prop.points
        d0 = np.linalg.norm(jpos - pts[0], axis=1)
        d1 = np.linalg.norm(jpos - pts[-1], axis=1)
        j0, j1 = int(d0.argmin()), int(d1.argmin())
        if d0[j0] > radius or d1[j1] > radius or j0 == j1:
            continue
        cost = float(d0[j0] + d1[j1])
        key = (min(j0, j1), max(j0, j1))
        if key in best and best[key][0] <= cost:
            continue
        best[key] = (cost, idx, j0, j1)

    out = []
    for key in sorted(best):
        cost, idx, j0, j1 = best[key]
        pts = proposals[idx].points.astype(np.float64).copy()
        n = pts.shape[0] - 1
        delta0 = jpos[j0] - pts[0]
        delta1 = jpos[j1] - pts[-1]
        frac = (np.arange(n + 1) / n)[:, None]
        pts += (1.0 - frac) * delta0 + frac * delta1
        out.append(MatchedLine(pts, (j0, j1), cost, proposals[idx].confidence))
    return out


@dataclass
class LabeledSample:
    line: np.ndarray
    label: str
    matched_gt: int | None
    distance: float


@dataclass
class SampleReport:
    pos_requested: int
    pos_taken: int
    neg_requested: int
    neg_taken: int
    gt_added: int

    @property
    def pos_shortfall(self):
        return max(self.pos_requested - self.pos_taken, 0)

    @property
    def neg_shortfall(self):
        return max(self.neg_requested - self.neg_taken, 0)


def label_proposals(proposals, gt, eta):
    """Label every proposal positive or negative against the ground truth.

    A proposal is positive when its structural distance to some ground-truth
    line is below ``eta``; ``matched_gt`` records the argmin index.  Every
    proposal appears exactly once in the output.
    """
    if eta <= 0:
        raise InputValidationError("eta must be positive")
    labeled = []
    if len(gt):
        try:
            gt_stack = np.stack([np.asarray(g, dtype=np.float64) for g in gt])
        except ValueError as exc:
            raise InputValidationError("ground-truth line orders differ") from exc
    else:
        gt_stack = None
    for prop in proposals:
        pts = np.asarray(prop.points, dtype=np.float64)
        if gt_stack is None:
            labeled.append(LabeledSample(pts, NEGATIVE, None, float("inf")))
            continue
        dists = structural_distance_matrix(pts[None], gt_stack)[0]
        gi = int(dists.argmin())
        d = float(dists[gi])
        if d < eta:
            labeled.append(LabeledSample(pts, POSITIVE, gi, d))
        else:
            labeled.append(LabeledSample(pts, NEGATIVE, None, d))
    return labeled


def sample_training_lines(proposals, gt, eta, n_pos, n_neg, seed, n_gt_pos=None):
    """Draw a reproducible training batch of positive and negative lines.

    Proposals are labeled by structural distance against ``gt`` with
    threshold ``eta``, then ``n_pos``/``n_neg`` are drawn uniformly without
    replacement from each pool using the explicit ``seed``.  Ground-truth
    lines are appended as extra positives (all of them unless ``n_gt_pos``
    caps the count).  Returns the samples plus a report carrying any
    shortfall when a pool is smaller than requested.
    """
    if n_pos < 0 or n_neg < 0:
        raise InputValidationError("sample counts must be >= 0")
    labeled = label_proposals(proposals, gt, eta)
    positives = [s for s in labeled if s.label == POSITIVE]
    negatives = [s for s in labeled if s.label == NEGATIVE]

    rng = np.random.default_rng(seed)

    def draw(pool, count):
        take = min(count, len(pool))
        if take == 0:
            return []
        idx = rng.choice(len(pool), size=take, replace=False)
        return [pool[i] for i in sorted(idx)]

    picked_pos = draw(positives, n_pos)
    picked_neg = draw(negatives, n_neg)

    gt_lines = list(enumerate(np.asarray(g, dtype=np.float64) for g in gt))
    if n_gt_pos is not None and n_gt_pos < len(gt_lines):
        idx = rng.choice(len(gt_lines), size=n_gt_pos, replace=False)
        gt_lines = [gt_lines[i] for i in sorted(idx)]
    gt_samples = [LabeledSample(g, POSITIVE, i, 0.0) for i, g in gt_lines]

    report = SampleReport(
        pos_requested=n_pos,
        pos_taken=len(picked_pos),
        neg_requested=n_neg,
        neg_taken=len(picked_neg),
        gt_added=len(gt_samples),
    )
    return picked_pos + gt_samples + picked_neg, report
