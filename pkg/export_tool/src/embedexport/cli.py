"""Command line for the store exporter.

Exit codes: 0 success, 1 usage error, 2 data/model error.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import __version__
from .exporter import VARIANTS, export_contextual, export_static
from .stores import ExportError, read_input_strings


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def build_parser() -> _Parser:
    parser = _Parser(prog="embed-export", description=__doc__)
    parser.add_argument("--version", action="version", version=f"embed-export {__version__}")
    parser.add_argument("--variant", required=True, choices=VARIANTS)
    parser.add_argument("--model", help="pretrained model directory (contextual variants)")
    parser.add_argument("--input", help="text file, one input string per line")
    parser.add_argument("--vectors", help="word-vector dump (static variant)")
    parser.add_argument("--out", required=True, help="store file to write")
    parser.add_argument("--log", default=None, help="export log path (default: <out>.log)")
    parser.add_argument("--max-length", type=int, default=None)
    parser.add_argument("--batch-size", type=int, default=32)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.variant == "static":
            if not args.vectors:
                parser.error("--variant static requires --vectors")
            report = export_static(args.vectors, args.out)
        else:
            if not (args.model and args.input):
                parser.error(f"--variant {args.variant} requires --model and --input")
            texts = read_input_strings(args.input)
            report = export_contextual(
                args.model,
                texts,
                args.variant,
                args.out,
                max_length=args.max_length,
                batch_size=args.batch_size,
            )
    except ExportError as err:
        print(f"embed-export: error: {err}", file=sys.stderr)
        return 2
    except OSError as err:
        print(f"embed-export: error: {err}", file=sys.stderr)
        return 2
    log_path = Path(args.log) if args.log else Path(args.out + ".log")
    log_path.write_text(report.to_log(), encoding="utf-8")
    print(
        f"wrote {report.records} records ({report.keys} keys, dim {report.dim}) to {args.out}"
    )
    return 0


if __name__ == "__main__":
    sys.exit(main())
