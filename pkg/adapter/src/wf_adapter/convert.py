"""Convert public wireframe-style annotations into toolkit annotation files.

Two source layouts are supported:

  wireframe   {"width": W, "height": H, "junctions": [[x, y], ...],
               "lines": [[i, j], ...]}
              where each line is a pair of indices into the junction list.

  york        {"width": W, "height": H, "segments": [[x1, y1, x2, y2], ...]}
              flat endpoint quads; the junction list is rebuilt from the
              unique endpoints in order of first appearance.

Every source file maps to one output file of the same name.  Files that do
not parse are skipped and recorded in ``failures.json`` next to the outputs;
a ``manifest.json`` lists the files that converted.
"""

import json
import logging
from pathlib import Path

from .formats import AdapterError, annotation_document, dump_json

log = logging.getLogger("wf_adapter")

FORMATS = ("wireframe", "york")


def _parse_wireframe(obj):
    width, height = int(obj["width"]), int(obj["height"])
    junctions = [(float(x), float(y)) for x, y in obj["junctions"]]
    lines = []
    for i, j in obj["lines"]:
        i, j = int(i), int(j)
        if not (0 <= i < len(junctions) and 0 <= j < len(junctions)):
            raise AdapterError("line endpoint index (%d, %d) out of bounds" % (i, j))
        lines.append((junctions[i], junctions[j]))
    return width, height, junctions, lines


def _parse_york(obj):
    width, height = int(obj["width"]), int(obj["height"])
    junctions = []
    seen = {}
    lines = []
    for x1, y1, x2, y2 in obj["segments"]:
        ends = []
        for p in ((float(x1), float(y1)), (float(x2), float(y2))):
            if p not in seen:
                seen[p] = len(junctions)
                junctions.append(p)
            ends.append(p)
        lines.append(tuple(ends))
    return width, height, junctions, lines


_PARSERS = {"wireframe": _parse_wireframe, "york": _parse_york}


def convert_file(src_path, fmt):
    try:
        with open(src_path) as f:
            obj = json.load(f)
        width, height, junctions, lines = _PARSERS[fmt](obj)
    except AdapterError:
        raise
    except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
        raise AdapterError("unparseable annotation: %s" % exc) from exc
    return annotation_document(width, height, junctions, lines)


def convert_annotations(src_dir, dst_dir, fmt):
    """Convert a directory of source files; returns (converted, failures)."""
    if fmt not in FORMATS:
        raise AdapterError("format must be one of %s, got %r" % (FORMATS, fmt))
    src = Path(src_dir)
    if not src.is_dir():
        raise AdapterError("source is not a directory: %s" % src)
    dst = Path(dst_dir)
    dst.mkdir(parents=True, exist_ok=True)

    converted = []
    failures = []
    for path in sorted(src.glob("*.json")):
        try:
            doc = convert_file(path, fmt)
        except AdapterError as exc:
            log.warning("skipping %s: %s", path.name, exc)
            failures.append({"file": path.name, "reason": str(exc)})
            continue
        (dst / path.name).write_text(dump_json(doc))
        converted.append(path.name)

    (dst / "manifest.json").write_text(dump_json({"images": converted}))
    (dst / "failures.json").write_text(dump_json({"failures": failures}))
    return converted, failures
