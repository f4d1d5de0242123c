"""Command line entry point.

Exit codes: 0 ok, 1 usage, 2 I/O, 3 shape/validation.
"""
from __future__ import annotations

import argparse
import sys
from dataclasses import replace

from .core import AsgError, fb_iou, iou
from .pipeline import RunManifest, SupportShot, run_pipeline
from .tensorio import TensorFormatError, read_tensor

EXIT_OK, EXIT_USAGE, EXIT_IO, EXIT_INVALID = 0, 1, 2, 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="asgproto", description="Adaptive prototype clustering and allocation")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    run = sub.add_parser("run", help="cluster support shots and allocate prototypes to a query")
    run.add_argument("--manifest", help="JSON run manifest")
    run.add_argument(
        "--support", nargs=2, action="append", metavar=("FEATURE", "MASK"),
        help="support feature and mask .asgt files (repeat per shot)",
    )
    run.add_argument("--query", help="query feature .asgt file")
    run.add_argument("--s-sp", type=float, help="average area per seed (default 100)")
    run.add_argument("--n-max", type=int, help="maximum prototypes per shot (default 5)")
    run.add_argument("--iters", type=int, help="clustering iterations (default 5)")
    run.add_argument("--r", type=float, help="spatial weighting factor (default sqrt(s_sp))")
    run.add_argument("--proj", help="projection matrix .asgt, shape (out, 2c+1)")
    run.add_argument("--proj-bias", help="projection bias .asgt, shape (1, out)")
    run.add_argument("--out", help="output directory (default ./out)")
    run.add_argument("--csv", action="store_true", help="also write similarity planes as CSV")
    run.add_argument("--figures", action="store_true", help="render PNG figures into OUT/figures")

    cmp_ = sub.add_parser("compare", help="IoU and FB-IoU between two mask files")
    cmp_.add_argument("pred")
    cmp_.add_argument("gt")
    return parser


def _manifest_from_args(parser, args) -> RunManifest:
    if args.manifest:
        if args.support or args.query:
            parser.error("--manifest cannot be combined with --support/--query")
        manifest = RunManifest.from_json(args.manifest)
    else:
        if not args.support or not args.query:
            parser.error("either --manifest or both --support and --query are required")
        manifest = RunManifest(
            support=tuple(SupportShot(f, m) for f, m in args.support),
            query=args.query,
            out=args.out or "out",
        )
    changes = {}
    if args.out:
        changes["out"] = args.out
    if args.proj:
        changes["projection"] = args.proj
    if args.proj_bias:
        changes["projection_bias"] = args.proj_bias
    if args.csv:
        changes["csv"] = True
    if args.figures:
        changes["figures"] = True
    manifest = replace(manifest, **changes)
    return manifest.with_overrides(s_sp=args.s_sp, n_max=args.n_max, iterations=args.iters, r=args.r)


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "run":
            run_pipeline(_manifest_from_args(parser, args))
        else:
            pred, gt = read_tensor(args.pred), read_tensor(args.gt)
            print(f"iou {iou(pred, gt):.4f}")
            print(f"fb_iou {fb_iou(pred, gt):.4f}")
    except (OSError, TensorFormatError) as exc:
        print(f"asgproto: {exc}", file=sys.stderr)
        return EXIT_IO
    except (AsgError, ValueError) as exc:
        print(f"asgproto: {exc}", file=sys.stderr)
        return EXIT_INVALID
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
