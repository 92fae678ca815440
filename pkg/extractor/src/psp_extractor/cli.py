"""Extractor CLI: one-clip and corpus modes."""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .config import ExtractorConfig
from .errors import ExtractorError
from .extract import Extractor, extract_corpus


def _config(args) -> ExtractorConfig:
    return ExtractorConfig(
        language=args.language,
        aligner_model_id=args.aligner,
        encoder_model_id=args.encoder,
        f0_method=args.f0_method,
        device=args.device,
    )


def cmd_one(args) -> int:
    extractor = Extractor(_config(args))
    bundle = extractor.extract(args.audio, args.text, uid=args.id, speaker_id=args.speaker)
    extractor.write_bundle(bundle, args.out)
    print(f"{bundle['uid']}: {bundle['emissions'].shape[0]} frames -> {args.out}")
    return 0


def cmd_corpus(args) -> int:
    results = extract_corpus(
        args.manifest, args.out, _config(args),
        corpus_id=args.corpus_id, system=args.system,
    )
    done = sum(1 for r in results if not r.skipped)
    skipped = sum(1 for r in results if r.skipped)
    print(f"{done} extracted, {skipped} skipped -> {args.out}")
    return 0


def _add_model_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--language", required=True, choices=("te", "hi", "ta"))
    p.add_argument("--aligner", required=True, help="CTC aligner model id or path")
    p.add_argument("--encoder", required=True, help="speech encoder model id or path")
    p.add_argument("--f0-method", default="autocorr")
    p.add_argument("--device", default="cpu")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="psp-extract", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("one", help="extract a single clip")
    p.add_argument("audio", type=Path)
    p.add_argument("--text", required=True)
    p.add_argument("--id", default=None)
    p.add_argument("--speaker", default=None)
    p.add_argument("-o", "--out", type=Path, required=True)
    _add_model_args(p)
    p.set_defaults(func=cmd_one)

    p = sub.add_parser("corpus", help="extract every row of a manifest")
    p.add_argument("manifest", type=Path, help="CSV/JSON rows: id, audio, text, speaker_id")
    p.add_argument("-o", "--out", type=Path, required=True)
    p.add_argument("--corpus-id", default=None)
    p.add_argument("--system", default=None)
    _add_model_args(p)
    p.set_defaults(func=cmd_corpus)
    return parser


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ExtractorError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
