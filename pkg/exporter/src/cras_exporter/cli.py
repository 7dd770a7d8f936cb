"""Exporter command line: `export` dumps features, `verify` re-checks output."""

from __future__ import annotations

import argparse
import logging
import sys

from cras_exporter.export import ExportConfig, ExportError, export, verify_export


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cras-export", description=__doc__)
    sub = parser.add_subparsers(dest="command", metavar="command")

    p = sub.add_parser("export", help="run the backbone and dump features + manifest")
    p.add_argument("--root", required=True, help="image dataset root (category/split/... layout)")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--backbone", default="wide_resnet50_2")
    p.add_argument("--levels", default="2,3")
    p.add_argument("--resize", type=int, default=329)
    p.add_argument("--crop", type=int, default=288)
    p.add_argument("--weights", choices=["pretrained", "random"], default="pretrained")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--batch-size", type=int, default=4)

    p = sub.add_parser("verify", help="validate an export against the wire contract")
    p.add_argument("--manifest", required=True)
    return parser


def main(argv=None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    if args.command == "export":
        try:
            cfg = ExportConfig(
                root=args.root,
                out_dir=args.out,
                backbone=args.backbone,
                levels=tuple(int(x) for x in args.levels.split(",")),
                resize=args.resize,
                crop=args.crop,
                weights=args.weights,
                seed=args.seed,
                batch_size=args.batch_size,
            )
            manifest = export(cfg)
        except ExportError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return 1
        print(manifest)
        return 0
    if args.command == "verify":
        report = verify_export(args.manifest)
        print(report.summary())
        return 0 if report.ok else 1
    build_parser().print_usage(sys.stderr)
    return 1


if __name__ == "__main__":
    sys.exit(main())
