"""Command line interface: extract activation vectors, verify exports."""

from __future__ import annotations

import argparse
import sys

from gemos_extract.backbones import INPUT_SIZES
from gemos_extract.errors import ExtractError
from gemos_extract.extract import POOLINGS, ExtractionSpec, extract
from gemos_extract.verify import verify_export


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gemos-extract",
        description="Export intermediate-activation feature files from a frozen backbone.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    ex = sub.add_parser("extract", help="run a backbone over a dataset and write a GMF file")
    ex.add_argument("--backbone", required=True, choices=sorted(INPUT_SIZES))
    ex.add_argument("--weights", default=None, help="checkpoint path (frozen, never trained here)")
    ex.add_argument("--dataset", required=True,
                    help="synthetic-shapes, mnist, cifar10, or folder:<path>")
    ex.add_argument("--split", required=True)
    ex.add_argument("--layers", default=None,
                    help="comma-separated layer names (default: the four stage outputs)")
    ex.add_argument("--pooling", default="global_average", choices=POOLINGS)
    ex.add_argument("--ood-flag", action="store_true",
                    help="mark every sample as unknown class (true label -1)")
    ex.add_argument("--batch-size", type=int, default=64)
    ex.add_argument("--device", default="cpu")
    ex.add_argument("--num-classes", type=int, default=None,
                    help="head width when the checkpoint does not dictate one")
    ex.add_argument("--out", required=True)

    ver = sub.add_parser("verify", help="re-read an exported file and check its invariants")
    ver.add_argument("path")
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "extract":
            layers = (
                tuple(s.strip() for s in args.layers.split(",") if s.strip())
                if args.layers
                else ExtractionSpec.__dataclass_fields__["layers"].default
            )
            spec = ExtractionSpec(
                backbone=args.backbone,
                weights=args.weights,
                dataset=args.dataset,
                split=args.split,
                layers=layers,
                pooling=args.pooling,
                ood=args.ood_flag,
                batch_size=args.batch_size,
                device=args.device,
                num_classes=args.num_classes,
                out=args.out,
            )
            result = extract(spec)
            widths = ", ".join(f"{k}={v}" for k, v in result.layer_widths.items())
            print(f"wrote {result.path}: {result.num_samples} samples, dim {result.dim} ({widths})")
            return 0
        report = verify_export(args.path)
        for line in report.lines():
            print(line)
        return 0 if report.ok else 1
    except (ExtractError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
