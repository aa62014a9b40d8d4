"""Reference losses with analytic gradients.

These are plain numpy implementations meant as ground truth for training
code: every elementary loss returns its value together with the gradient
with respect to the predictions, and the composite losses assemble the
weighted sums used for junction maps, line maps, and proposal
classification.  Reduction is the mean within each component.  Offset terms
are evaluated only on bins occupied in the ground truth, where offsets are
defined.
"""

from dataclasses import dataclass, field

import numpy as np

from .validation import InputValidationError

EPS = 1e-7


@dataclass(frozen=True)
class LossWeights:
    conf_j: float = 1.0
    offset_j: float = 1.0
    center: float = 1.0
    offset: float = 1.0
    pos: float = 1.0
    neg: float = 1.0

    def __post_init__(self):
        for name in ("conf_j", "offset_j", "center", "offset", "pos", "neg"):
            if getattr(self, name) < 0:
                raise InputValidationError("loss weights must be non-negative")


def _paired(pred, target, name):
    pred = np.asarray(pred, dtype=np.float64)
    target = np.asarray(target, dtype=np.float64)
    if pred.shape != target.shape:
        raise InputValidationError(
            "%s shape mismatch: %s vs %s" % (name, pred.shape, target.shape)
        )
    return pred, target


def bce(pred, target):
    """Mean binary cross entropy and its gradient w.r.t. the predictions.

    Predictions are clamped to [EPS, 1 - EPS] before the logs; the gradient
    is evaluated at the clamped values and zeroed where clamping is active.
    """
    pred, target = _paired(pred, target, "bce")
    if pred.size == 0:
        return 0.0, np.zeros_like(pred)
    p = np.clip(pred, EPS, 1.0 - EPS)
    loss = -(target * np.log(p) + (1.0 - target) * np.log(1.0 - p)).mean()
    grad = (-(target / p) + (1.0 - target) / (1.0 - p)) / pred.size
    grad = np.where((pred > EPS) & (pred < 1.0 - EPS), grad, 0.0)
    return float(loss), grad


def smooth_l1(pred, target):
    """Mean smooth L1 (0.5 x^2 inside |x| < 1, |x| - 0.5 outside) and gradient."""
    pred, target = _paired(pred, target, "smooth_l1")
    if pred.size == 0:
        return 0.0, np.zeros_like(pred)
    x = pred - target
    ax = np.abs(x)
    per = np.where(ax < 1.0, 0.5 * x * x, ax - 0.5)
    grad = np.where(ax < 1.0, x, np.sign(x)) / pred.size
    return float(per.mean()), grad


def _occupied(gt_confidence):
    return gt_confidence == 1.0


def junction_loss(pred, gt, w=LossWeights(), return_grads=False):
    """Weighted confidence BCE plus masked offset smooth L1 for junction maps."""
    if pred.confidence.shape != gt.confidence.shape:
        raise InputValidationError("junction map shapes differ")
    conf_loss, conf_grad = bce(pred.confidence, gt.confidence)
    mask = _occupied(gt.confidence)
    off_loss, masked_grad = smooth_l1(pred.offsets[mask], gt.offsets[mask])
    total = w.conf_j * conf_loss + w.offset_j * off_loss
    if not return_grads:
        return float(total)
    off_grad = np.zeros_like(pred.offsets)
    off_grad[mask] = w.offset_j * masked_grad
    return float(total), {"confidence": w.conf_j * conf_grad, "offsets": off_grad}


def line_loss(pred, gt, w=LossWeights(), return_grads=False):
    """Center BCE plus the summed per-offset-vector smooth L1 on occupied bins."""
    if pred.order != gt.order:
        raise InputValidationError("line map orders differ")
    if pred.center_confidence.shape != gt.center_confidence.shape:
        raise InputValidationError("line map shapes differ")
    conf_loss, conf_grad = bce(pred.center_confidence, gt.center_confidence)
    mask = _occupied(gt.center_confidence)
    m = gt.stored_offsets
    off_total = 0.0
    off_grad = np.zeros_like(pred.eq_offsets)
    for i in range(m):
        sl = slice(2 * i, 2 * i + 2)
        term, masked_grad = smooth_l1(pred.eq_offsets[mask][:, sl], gt.eq_offsets[mask][:, sl])
        off_total += term
        if return_grads:
            buf = np.zeros_like(off_grad[..., sl])
            buf[mask] = w.offset * masked_grad
            off_grad[..., sl] = buf
    total = w.center * conf_loss + w.offset * off_total
    if not return_grads:
        return float(total)
    return float(total), {
        "center_confidence": w.center * conf_grad,
        "eq_offsets": off_grad,
    }


def cls_loss(pred_conf, labels, w=LossWeights(), return_grads=False):
    """Class-balanced BCE: positive and negative samples are meaned separately."""
    pred_conf, labels = _paired(pred_conf, labels, "cls")
    if pred_conf.size == 0:
        raise InputValidationError("need at least one sample")
    pos = labels == 1.0
    neg = ~pos
    grad = np.zeros_like(pred_conf)
    total = 0.0
    if pos.any():
        term, g = bce(pred_conf[pos], np.ones(pos.sum()))
        total += w.pos * term
        grad[pos] = w.pos * g
    if neg.any():
        term, g = bce(pred_conf[neg], np.zeros(neg.sum()))
        total += w.neg * term
        grad[neg] = w.neg * g
    if not return_grads:
        return float(total)
    return float(total), grad


@dataclass
class LossReport:
    junction: float
    line: float
    cls: float
    total: float
    components: dict = field(default_factory=dict)


def total_loss(junction, line, cls):
    """Combine the three module losses; the total is their plain sum."""
    for name, v in (("junction", junction), ("line", line), ("cls", cls)):
        if not np.isfinite(v):
            raise InputValidationError("%s loss is not finite" % name)
    return LossReport(
        junction=float(junction),
        line=float(line),
        cls=float(cls),
        total=float(junction + line + cls),
        components={"junction": float(junction), "line": float(line), "cls": float(cls)},
    )
