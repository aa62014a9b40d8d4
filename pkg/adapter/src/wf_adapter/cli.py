"""wf-adapter command line.

Usage:
    wf-adapter convert --src datasets/wireframe_raw --dst out/ --format wireframe
"""

import argparse
import logging
import sys

from .convert import FORMATS, convert_annotations
from .formats import AdapterError


def build_parser():
    parser = argparse.ArgumentParser(
        prog="wf-adapter",
        description="convert public wireframe-style annotations into toolkit files",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    p = sub.add_parser("convert", help="convert a directory of source annotations")
    p.add_argument("--src", required=True)
    p.add_argument("--dst", required=True)
    p.add_argument("--format", required=True, choices=FORMATS)
    return parser


def main(argv=None):
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(message)s")
    args = build_parser().parse_args(argv)
    try:
        converted, failures = convert_annotations(args.src, args.dst, args.format)
    except AdapterError as exc:
        print("error: %s" % exc, file=sys.stderr)
        return 2
    print("converted %d file(s), %d failure(s)" % (len(converted), len(failures)))
    return 0


if __name__ == "__main__":
    sys.exit(main())
