"""Annotation and prediction containers plus their JSON file schemas.

Annotation files are JSON documents:

    {"image": {"width": W, "height": H, "camera": {...}?},
     "junctions": [[x, y], ...],
     "lines": [{"order": n, "points": [[x, y], ...], "wrapped": bool?}, ...]}

Coordinates are serialized at float32 precision with sorted keys so that a
load/save round trip is byte stable.  Lines flagged ``wrapped`` cross the
horizontal seam of an equirectangular image and may carry coordinates
outside [0, width).

Prediction files carry per-image detections with confidences:

    {"images": {"<name>": {"junctions": [[x, y, conf], ...],
                           "lines": [{"points": ..., "confidence": c}, ...]}}}
"""

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .fileutil import atomic_write_text, canonical_json
from .validation import InputValidationError, as_point_array

# filenames in a dataset directory that are not per-image annotations
RESERVED_NAMES = {"manifest.json", "failures.json", "synth_report.json", "report.json"}


@dataclass
class LineAnnotation:
    """A line as n+1 equipartition points; ``wrapped`` marks seam crossings."""

    points: np.ndarray
    wrapped: bool = False

    def __post_init__(self):
        self.points = np.asarray(self.points, dtype=np.float64)
        if self.points.ndim != 2 or self.points.shape[1] != 2 or self.points.shape[0] < 2:
            raise InputValidationError("line points must have shape (n+1, 2) with n >= 1")
        if not np.isfinite(self.points).all():
            raise InputValidationError("line points contain non-finite values")

    @property
    def order(self):
        return self.points.shape[0] - 1


@dataclass
class AnnotationSet:
    """Ground-truth content of one image: junctions plus equipartition lines."""

    width: int
    height: int
    junctions: np.ndarray
    lines: list
    camera: dict | None = None

    def __post_init__(self):
        if self.width <= 0 or self.height <= 0:
            raise InputValidationError("image dimensions must be positive")
        self.junctions = (
            np.zeros((0, 2))
            if len(self.junctions) == 0
            else as_point_array(self.junctions, "junctions")
        )


@dataclass
class Junction:
    """A detected junction: image-pixel position plus confidence."""

    position: np.ndarray
    confidence: float = 1.0

    def __post_init__(self):
        self.position = np.asarray(self.position, dtype=np.float64).reshape(2)


@dataclass
class LineProposal:
    """A candidate line: equipartition points plus confidence."""

    points: np.ndarray
    confidence: float = 1.0

    def __post_init__(self):
        self.points = as_point_array(self.points, "points", min_points=2)

    @property
    def order(self):
        return self.points.shape[0] - 1


@dataclass
class ImagePredictions:
    lines: list = field(default_factory=list)
    junctions: list = field(default_factory=list)


def f32(value):
    """Round a scalar to float32 precision for serialization."""
    return float(np.float32(value))


def points_to_json(points):
    return [[f32(x), f32(y)] for x, y in np.asarray(points, dtype=np.float64)]


def annotation_to_json_obj(ann):
    image = {"width": int(ann.width), "height": int(ann.height)}
    if ann.camera is not None:
        image["camera"] = ann.camera
    lines = []
    for line in ann.lines:
        entry = {"order": int(line.order), "points": points_to_json(line.points)}
        if line.wrapped:
            entry["wrapped"] = True
        lines.append(entry)
    return {
        "image": image,
        "junctions": points_to_json(ann.junctions),
        "lines": lines,
    }


def annotation_from_json_obj(obj):
    try:
        image = obj["image"]
        width, height = int(image["width"]), int(image["height"])
        junctions = obj.get("junctions", [])
        lines = []
        for entry in obj.get("lines", []):
            points = np.asarray(entry["points"], dtype=np.float64)
            order = int(entry["order"])
            if points.shape[0] != order + 1:
                raise InputValidationError(
                    "line declares order %d but has %d points" % (order, points.shape[0])
                )
            lines.append(LineAnnotation(points, wrapped=bool(entry.get("wrapped", False))))
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, InputValidationError):
            raise
        raise InputValidationError("malformed annotation document: %s" % exc) from exc
    return AnnotationSet(width, height, junctions, lines, camera=image.get("camera"))


def save_annotation(path, ann):
    atomic_write_text(path, canonical_json(annotation_to_json_obj(ann)))


def load_annotation(path):
    try:
        with open(path) as f:
            obj = json.load(f)
    except json.JSONDecodeError as exc:
        raise InputValidationError("invalid JSON in %s: %s" % (path, exc)) from exc
    return annotation_from_json_obj(obj)


def list_annotation_files(directory):
    """Annotation files of a dataset directory, honoring manifest.json if present."""
    directory = Path(directory)
    if not directory.is_dir():
        raise InputValidationError("not a directory: %s" % directory)
    manifest = directory / "manifest.json"
    if manifest.exists():
        with open(manifest) as f:
            names = json.load(f).get("images", [])
        return [directory / name for name in names]
    return sorted(
        p for p in directory.glob("*.json") if p.name not in RESERVED_NAMES
    )


def predictions_to_json_obj(predictions):
    images = {}
    for name, preds in predictions.items():
        images[name] = {
            "junctions": [
                [f32(j.position[0]), f32(j.position[1]), f32(j.confidence)]
                for j in preds.junctions
            ],
            "lines": [
                {"points": points_to_json(l.points), "confidence": f32(l.confidence)}
                for l in preds.lines
            ],
        }
    return {"images": images}


def predictions_from_json_obj(obj):
    predictions = {}
    try:
        for name, entry in obj["images"].items():
            junctions = [
                Junction(np.array([x, y]), confidence=c)
                for x, y, c in entry.get("junctions", [])
            ]
            lines = [
                LineProposal(np.asarray(l["points"], dtype=np.float64), l["confidence"])
                for l in entry.get("lines", [])
            ]
            predictions[name] = ImagePredictions(lines=lines, junctions=junctions)
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, InputValidationError):
            raise
        raise InputValidationError("malformed predictions document: %s" % exc) from exc
    return predictions


def save_predictions(path, predictions):
    atomic_write_text(path, canonical_json(predictions_to_json_obj(predictions)))


def load_predictions(path):
    try:
        with open(path) as f:
            obj = json.load(f)
    except json.JSONDecodeError as exc:
        raise InputValidationError("invalid JSON in %s: %s" % (path, exc)) from exc
    return predictions_from_json_obj(obj)
