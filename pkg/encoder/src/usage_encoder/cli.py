"""CLI: turn a dataset into embedding tables, or dump per-token vectors."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .adapter import EncoderConfig, Layer, embed_dataset, embed_tokens


def _config_from_args(args) -> EncoderConfig:
    return EncoderConfig(
        model=args.model,
        layer=Layer(args.layer),
        device=args.device,
        batch_size=args.batch_size,
    )


def _add_encoder_flags(sub):
    sub.add_argument("--model", required=True, help="encoder model id or local path")
    sub.add_argument("--layer", choices=[l.value for l in Layer], default=Layer.LAST.value)
    sub.add_argument("--device", default="cpu")
    sub.add_argument("--batch-size", dest="batch_size", type=int, default=16)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="usage-encoder", description=__doc__)
    subs = parser.add_subparsers(dest="command")

    sub = subs.add_parser("embed", help="write words/usages/glosses EMB1 tables plus manifest")
    sub.add_argument("--dataset", required=True)
    sub.add_argument("--out-dir", dest="out_dir", required=True)
    _add_encoder_flags(sub)

    sub = subs.add_parser("tokens", help="dump per-token vectors for texts (one per line)")
    sub.add_argument("--input", required=True, help="text file, one text per line")
    sub.add_argument("--out", required=True, help="output JSONL path")
    _add_encoder_flags(sub)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if not args.command:
        parser.print_help(sys.stderr)
        return 1
    try:
        if args.command == "embed":
            manifest = embed_dataset(args.dataset, _config_from_args(args), args.out_dir)
            print(json.dumps(manifest, indent=2, sort_keys=True))
        else:
            texts = Path(args.input).read_text(encoding="utf-8").splitlines()
            count = embed_tokens(texts, _config_from_args(args), args.out)
            print(f"wrote {count} lines to {args.out}", file=sys.stderr)
        return 0
    except (FileNotFoundError, ValueError) as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return 1
    except RuntimeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
