"""Command-line entry point.

Subcommands:
    fit      fit one polyline JSON with a Bezier curve and report errors
    synth    distort a directory of straight-line annotations via a camera
    encode   encode annotations into grid-map tensor files
    decode   decode grid-map tensor files into a predictions JSON,
             optionally snapping line endpoints to junctions (--radius)
    sample   label predictions against ground truth and draw a training batch
    eval     score predictions against ground truth (report, CSV, SVG)
    align    pool per-line feature vectors from a feature-map tensor

All outputs are deterministic for fixed inputs and flags: JSON is written
with sorted keys and float32-rounded values, tensors in the binary
container, and every file atomically.  Exit codes: 0 success, 2 input
validation error, 3 numerical failure.  The ULSD_THREADS environment
variable caps per-file parallelism.

Example:
    bezseg synth --input anns/ --out fish/ --camera fisheye.json --order 2
    bezseg encode --input fish/ --out maps/ --grid 128x128
    bezseg decode --input maps/ --out preds.json --top-k 300
    bezseg eval --pred preds.json --gt fish/ --out scores/
"""

import argparse
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import align as align_mod
from . import bezier, cameras, codec, metrics, proposals
from .annotations import (
    ImagePredictions,
    Junction,
    LineProposal,
    f32,
    list_annotation_files,
    load_annotation,
    load_predictions,
    points_to_json,
    save_annotation,
    save_predictions,
)
from .fileutil import atomic_write_text, canonical_json
from .tensorio import read_tensor, write_tensor
from .validation import InputValidationError, NumericalError

EXIT_VALIDATION = 2
EXIT_NUMERICAL = 3

MAP_SUFFIXES = {
    "jconf": ".jconf.ultd",
    "joff": ".joff.ultd",
    "lconf": ".lconf.ultd",
    "lcoff": ".lcoff.ultd",
    "loff": ".loff.ultd",
}


def _worker_count(n_items):
    cap = os.environ.get("ULSD_THREADS")
    try:
        cap = int(cap) if cap else 1
    except ValueError:
        raise InputValidationError("ULSD_THREADS must be an integer")
    return max(1, min(cap, n_items)) if n_items else 1


def _map_files(fn, items):
    workers = _worker_count(len(items))
    if workers == 1:
        for item in items:
            fn(item)
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            list(pool.map(fn, items))


def _parse_grid(text):
    try:
        w, h = text.lower().split("x")
        return int(w), int(h)
    except ValueError as exc:
        raise InputValidationError("--grid expects WxH, got %r" % text) from exc


def _load_json(path):
    try:
        with open(path) as f:
            return json.load(f)
    except FileNotFoundError as exc:
        raise InputValidationError("cannot read %s" % path) from exc
    except json.JSONDecodeError as exc:
        raise InputValidationError("invalid JSON in %s: %s" % (path, exc)) from exc


def _write_manifest(out_dir, names):
    atomic_write_text(Path(out_dir) / "manifest.json",
                      canonical_json({"images": sorted(names)}))


def cmd_fit(args):
    doc = _load_json(args.input)
    if "points" not in doc:
        raise InputValidationError("polyline JSON needs a 'points' array")
    points = np.asarray(doc["points"], dtype=np.float64)
    segment = bezier.fit_control_points(
        points, args.order, params=args.params, pin_endpoints=args.pin_endpoints
    )
    report = bezier.fitting_error(segment, points, params=args.params)
    out = {
        "order": segment.order,
        "control_points": points_to_json(segment.control_points),
        "fit_report": {
            "mean_error": f32(report.mean_error),
            "max_error": f32(report.max_error),
            "per_point_errors": [f32(v) for v in report.per_point_errors],
        },
    }
    text = canonical_json(out)
    if args.out:
        atomic_write_text(args.out, text)
    else:
        sys.stdout.write(text)
    return 0


def cmd_synth(args):
    cam = cameras.camera_from_json(_load_json(args.camera))
    if args.camera_noise:
        cam = cameras.perturb_camera(cam, args.camera_noise, args.seed)
    files = list_annotation_files(args.input)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    totals = {"lines_dropped": 0, "lines_partial": 0, "junctions_dropped": 0}

    def run(path):
        ann = load_annotation(path)
        distorted, report = cameras.synth_annotation(
            ann, cam, order=args.order, samples=args.samples,
            pin_endpoints=args.pin_endpoints,
        )
        save_annotation(out_dir / path.name, distorted)
        totals["lines_dropped"] += report.lines_dropped
        totals["lines_partial"] += report.lines_partial
        totals["junctions_dropped"] += report.junctions_dropped

    _map_files(run, files)
    _write_manifest(out_dir, [p.name for p in files])
    atomic_write_text(out_dir / "synth_report.json", canonical_json(totals))
    return 0


def cmd_encode(args):
    files = list_annotation_files(args.input)
    grid_w, grid_h = _parse_grid(args.grid)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)

    def run(path):
        ann = load_annotation(path)
        spec = codec.GridSpec(ann.width, ann.height, grid_w, grid_h)
        orders = {l.order for l in ann.lines}
        if len(orders) > 1:
            raise InputValidationError("%s mixes line orders %s" % (path.name, orders))
        order = args.order if args.order else (orders.pop() if orders else 1)
        junction_maps = codec.encode_junctions(ann.junctions, spec)
        line_maps = codec.encode_lines([l.points for l in ann.lines], spec, order)
        stem = path.stem
        write_tensor(out_dir / (stem + MAP_SUFFIXES["jconf"]), junction_maps.confidence)
        write_tensor(out_dir / (stem + MAP_SUFFIXES["joff"]), junction_maps.offsets)
        write_tensor(out_dir / (stem + MAP_SUFFIXES["lconf"]), line_maps.center_confidence)
        write_tensor(out_dir / (stem + MAP_SUFFIXES["lcoff"]), line_maps.center_offsets)
        write_tensor(out_dir / (stem + MAP_SUFFIXES["loff"]), line_maps.eq_offsets)
        meta = {
            "image": {"width": ann.width, "height": ann.height},
            "grid": {"width": grid_w, "height": grid_h},
            "order": order,
            "collisions": {
                "junctions": junction_maps.collisions,
                "lines": line_maps.collisions,
            },
        }
        atomic_write_text(out_dir / (stem + ".meta.json"), canonical_json(meta))

    _map_files(run, files)
    _write_manifest(out_dir, [p.name for p in files])
    return 0


def cmd_decode(args):
    in_dir = Path(args.input)
    metas = sorted(in_dir.glob("*.meta.json"))
    if not metas:
        raise InputValidationError("no *.meta.json files under %s" % in_dir)
    predictions = {}
    for meta_path in metas:
        meta = _load_json(meta_path)
        stem = meta_path.name[: -len(".meta.json")]
        spec = codec.GridSpec(
            meta["image"]["width"], meta["image"]["height"],
            meta["grid"]["width"], meta["grid"]["height"],
        )
        junction_maps = codec.JunctionMaps(
            read_tensor(in_dir / (stem + MAP_SUFFIXES["jconf"])).astype(np.float64),
            read_tensor(in_dir / (stem + MAP_SUFFIXES["joff"])).astype(np.float64),
        )
        line_maps = codec.LineMaps(
            read_tensor(in_dir / (stem + MAP_SUFFIXES["lconf"])).astype(np.float64),
            read_tensor(in_dir / (stem + MAP_SUFFIXES["lcoff"])).astype(np.float64),
            read_tensor(in_dir / (stem + MAP_SUFFIXES["loff"])).astype(np.float64),
            int(meta["order"]),
        )
        junctions = codec.decode_junctions(
            junction_maps, spec, top_k=args.top_k, min_conf=args.min_conf,
            window=args.nms_window,
        )
        lines = codec.decode_lines(
            line_maps, spec, top_k=args.top_k, min_conf=args.min_conf,
            window=args.nms_window,
        )
        if args.radius > 0:
            matched = proposals.match_lines_junctions(lines, junctions, args.radius)
            lines = [
                LineProposal(m.points, confidence=m.confidence) for m in matched
            ]
        predictions[stem] = ImagePredictions(lines=lines, junctions=junctions)
    save_predictions(args.out, predictions)
    return 0


def cmd_sample(args):
    predictions = _load_eval_predictions(args.pred)
    out = {"images": {}}
    for idx, path in enumerate(list_annotation_files(args.gt)):
        name = path.stem
        if name not in predictions:
            raise InputValidationError("no predictions for image %r" % name)
        ann = load_annotation(path)
        # eta follows the same 128-max-dim convention as evaluation; rescale
        # it into image coordinates instead of touching the geometry
        scale = 128.0 / max(ann.width, ann.height)
        eta_image = args.eta / (scale * scale)
        samples, report = proposals.sample_training_lines(
            predictions[name].lines,
            [l.points for l in ann.lines],
            eta=eta_image,
            n_pos=args.n_pos,
            n_neg=args.n_neg,
            seed=[args.seed, idx],
            n_gt_pos=args.n_gt_pos,
        )
        entries = []
        for s in samples:
            d = s.distance * scale * scale
            entries.append({
                "points": points_to_json(s.line),
                "label": s.label,
                "matched_gt": s.matched_gt,
                "distance": f32(d) if np.isfinite(d) else None,
            })
        out["images"][name] = {
            "samples": entries,
            "report": {
                "pos_taken": report.pos_taken,
                "pos_shortfall": report.pos_shortfall,
                "neg_taken": report.neg_taken,
                "neg_shortfall": report.neg_shortfall,
                "gt_added": report.gt_added,
            },
        }
    atomic_write_text(args.out, canonical_json(out))
    return 0


def _load_eval_predictions(pred_path):
    """Predictions JSON, or a directory of annotations taken at confidence 1."""
    path = Path(pred_path)
    if path.is_dir():
        predictions = {}
        for f in list_annotation_files(path):
            ann = load_annotation(f)
            predictions[f.stem] = ImagePredictions(
                lines=[LineProposal(l.points, confidence=1.0) for l in ann.lines],
                junctions=[Junction(j, confidence=1.0) for j in ann.junctions],
            )
        return predictions
    return load_predictions(path)


def cmd_eval(args):
    predictions = _load_eval_predictions(args.pred)
    ground_truth = {}
    for f in list_annotation_files(args.gt):
        ground_truth[f.stem] = load_annotation(f)
    report = metrics.evaluate_predictions(
        predictions, ground_truth, dataset_type=args.dataset_type
    )
    metrics.write_report(args.out, report)
    return 0


def cmd_align(args):
    feature_map = read_tensor(args.features).astype(np.float64)
    if feature_map.ndim != 3:
        raise InputValidationError(
            "feature tensor must have shape (C, H, W), got %s" % (feature_map.shape,)
        )
    ann = load_annotation(args.lines)
    spec = codec.GridSpec(ann.width, ann.height, feature_map.shape[2], feature_map.shape[1])
    features = align_mod.align_lines(
        feature_map, [l.points for l in ann.lines],
        n_points=args.n_points, pool_window=args.pool, spec=spec,
    )
    write_tensor(args.out, features)
    return 0


def build_parser():
    parser = argparse.ArgumentParser(
        prog="bezseg",
        description="Bezier line segment toolkit: fitting, synthesis, codecs, evaluation",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("fit", help="fit a Bezier curve to a polyline JSON")
    p.add_argument("--input", required=True, help="polyline JSON with a 'points' array")
    p.add_argument("--order", type=int, default=2)
    p.add_argument("--params", choices=bezier.PARAM_MODES, default="uniform")
    p.add_argument("--pin-endpoints", action="store_true")
    p.add_argument("--out", help="output JSON path (default stdout)")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("synth", help="distort annotations through a camera model")
    p.add_argument("--input", required=True, help="directory of annotation files")
    p.add_argument("--out", required=True)
    p.add_argument("--camera", required=True, help="camera config JSON")
    p.add_argument("--order", type=int, default=2)
    p.add_argument("--samples", type=int, default=64)
    p.add_argument("--camera-noise", type=float, default=0.0,
                   help="uniform +-fraction perturbation of distortion coefficients")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--pin-endpoints", action="store_true",
                   help="keep fitted line endpoints on the distorted segment ends")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("encode", help="encode annotations into grid-map tensors")
    p.add_argument("--input", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--grid", default="128x128", help="grid size WxH")
    p.add_argument("--order", type=int, default=0,
                   help="line order (default: inferred from the annotations)")
    p.set_defaults(func=cmd_encode)

    p = sub.add_parser("decode", help="decode grid-map tensors into predictions")
    p.add_argument("--input", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--top-k", type=int, default=300)
    p.add_argument("--min-conf", type=float, default=0.008)
    p.add_argument("--nms-window", type=int, default=3)
    p.add_argument("--radius", type=float, default=0.0,
                   help="if > 0, keep only lines whose endpoints match two "
                        "junctions within this many pixels and snap them")
    p.set_defaults(func=cmd_decode)

    p = sub.add_parser("sample", help="label predictions against ground truth "
                                      "and draw a training batch")
    p.add_argument("--pred", required=True,
                   help="predictions JSON or a directory of annotations")
    p.add_argument("--gt", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--eta", type=float, default=4.0,
                   help="positive-label structural-distance threshold at the "
                        "128-max-dim scale")
    p.add_argument("--n-pos", type=int, default=300)
    p.add_argument("--n-neg", type=int, default=300)
    p.add_argument("--n-gt-pos", type=int, default=None)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("eval", help="score predictions against ground truth")
    p.add_argument("--pred", required=True,
                   help="predictions JSON or a directory of annotations")
    p.add_argument("--gt", required=True, help="ground-truth annotation directory")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--dataset-type", choices=("pinhole", "fisheye", "spherical"),
                   default="pinhole")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("align", help="pool per-line features from a feature map")
    p.add_argument("--features", required=True, help="feature-map tensor file")
    p.add_argument("--lines", required=True, help="annotation JSON with the lines")
    p.add_argument("--out", required=True)
    p.add_argument("--np", dest="n_points", type=int, default=32)
    p.add_argument("--pool", type=int, default=4)
    p.set_defaults(func=cmd_align)

    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except InputValidationError as exc:
        print("error: %s" % exc, file=sys.stderr)
        return EXIT_VALIDATION
    except NumericalError as exc:
        print("numerical error: %s" % exc, file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
