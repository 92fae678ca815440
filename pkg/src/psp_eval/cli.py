"""Command-line interface.

Subcommands: validate, centroids, bank, score, sanity, report.
Exit codes: 0 success, 1 validation failure, 2 completed with warnings.
The PSP_EVAL_CENTROIDS environment variable supplies a default --centroids.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

from . import centroids as cent
from . import interchange as ic
from . import scorecard as sc
from .bootstrap import BootstrapConfig
from .errors import PspError

log = logging.getLogger("psp_eval")

CENTROIDS_ENV = "PSP_EVAL_CENTROIDS"


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--seed", type=int, default=0, help="seed for all randomized steps")
    p.add_argument("--tau", type=float, default=0.5, help="collapse threshold on fidelity")
    p.add_argument("--eps", type=float, default=1e-6, help="covariance regularizer for Fréchet")
    p.add_argument("--replicates", type=int, default=1000, help="bootstrap replicates")
    p.add_argument("--zscore-psd", action="store_true", help="standardize PSD features by the native set")
    p.add_argument("--tables", type=Path, default=None, help="dimension tables config (default: packaged)")


def _options(args) -> sc.ScoringOptions:
    return sc.ScoringOptions(
        tau=args.tau,
        eps=args.eps,
        zscore_psd=args.zscore_psd,
        bootstrap=BootstrapConfig(replicates=args.replicates, seed=args.seed),
        dump_dir=getattr(args, "dump_utterances", None),
    )


def _centroids_default(value: Path | None) -> Path:
    if value is not None:
        return value
    env = os.environ.get(CENTROIDS_ENV)
    if env:
        return Path(env)
    raise SystemExit(f"--centroids not given and {CENTROIDS_ENV} is unset")


def cmd_validate(args) -> int:
    manifest = ic.load_corpus(args.corpus)
    bad = 0
    for entry in manifest.utterances:
        bundle = ic.load_bundle(manifest.bundle_dir(entry))
        violations = ic.validate_bundle(bundle)
        unknown = ic.unknown_graphemes(bundle)
        if violations:
            bad += 1
            for v in violations:
                print(f"{bundle.id}: VIOLATION {v}")
        if unknown:
            print(f"{bundle.id}: warning: graphemes not in vocab: {' '.join(sorted(set(unknown)))}")
    print(f"{len(manifest.utterances)} bundles checked, {bad} invalid")
    return sc.EXIT_VALIDATION if bad else sc.EXIT_OK


def cmd_centroids(args) -> int:
    manifest = ic.load_corpus(args.corpus)
    tables = ic.load_dimension_tables(args.tables)
    ids = cent.sample_corpus(
        manifest, cap=args.cap, min_speakers=args.min_speakers, seed=args.seed
    )
    selected = {e["id"]: e for e in manifest.utterances}
    bundles = [ic.load_bundle(manifest.bundle_dir(selected[i])) for i in ids]
    extra = {}
    ratio = cent.compute_lf_native_ratio(bundles, tables)
    if ratio is not None:
        extra["lf_native_ratio"] = ratio
    cs = cent.build_centroids(
        bundles, tables, corpus_id=manifest.corpus_id, extra_provenance=extra
    )
    cent.save_centroids(args.out, cs)
    print(f"{len(cs.entries)} centroid entries from {len(bundles)} bundles -> {args.out}")
    if not cs.entries:
        print("warning: no centroid entries could be built")
        return sc.EXIT_PARTIAL
    return sc.EXIT_OK


def cmd_bank(args) -> int:
    manifest = ic.load_corpus(args.corpus)
    bundles = list(ic.iter_bundles(manifest))
    bank = cent.build_reference_bank(bundles)
    cent.save_bank(args.out, bank)
    n, m = bank.utterance_embeddings.shape[0], bank.prosodic_matrix.shape[0]
    print(f"reference bank: {n} utterance embeddings, {m} prosodic rows -> {args.out}")
    return sc.EXIT_OK


def _score_common(args, native_floor: bool) -> int:
    manifest = ic.load_corpus(args.corpus)
    cs = cent.load_centroids(_centroids_default(args.centroids))
    bank = cent.load_bank(args.refs)
    tables = ic.load_dimension_tables(args.tables)
    lf_priors = ic.load_lf_priors(args.tables)
    if native_floor:
        sc.check_sanity_disjoint(manifest, cs)
    doc, code = sc.score_corpus(
        manifest, cs, bank, tables, lf_priors,
        options=_options(args), native_floor=native_floor,
    )
    doc["config_fingerprint"] = sc.config_fingerprint(cs, tables, _options(args))
    if getattr(args, "floor", None):
        doc = sc.apply_noise_floor(doc, sc.load_scorecard(args.floor))
    sc.write_scorecard(args.out, doc)
    _print_summary(doc)
    return code


def _print_summary(doc: dict) -> None:
    print(f"system={doc['system']} language={doc['language']} n_wavs={doc['n_wavs']}")
    for dim in sorted(doc["per_dimension"]):
        body = doc["per_dimension"][dim]
        if body["status"] != "scored":
            print(f"  {dim:3s} {body['status']}")
            continue
        norm = f" norm={body['normalized']:.3f}" if body["normalized"] is not None else ""
        print(
            f"  {dim:3s} fidelity={body['mean_fidelity']:.3f} "
            f"collapse={body['collapse_rate']:.3f} n={body['n_tokens']} "
            f"ci=[{body['ci_low']:.3f},{body['ci_high']:.3f}]{norm}"
        )
    for key in ("fad", "psd"):
        body = doc[key]
        if body["status"] == "scored":
            print(
                f"  {key.upper()} total={body['total']:.4g} "
                f"mean_dist={body['mean_dist']:.4g} trace_term={body['trace_term']:.4g}"
            )
        else:
            print(f"  {key.upper()} {body['status']}")
    for w in doc["warnings"]:
        print(f"  warning: {w}")


def cmd_score(args) -> int:
    return _score_common(args, native_floor=False)


def cmd_sanity(args) -> int:
    return _score_common(args, native_floor=True)


def cmd_report(args) -> int:
    cards = [sc.load_scorecard(p) for p in args.scorecards]
    report = sc.build_report(cards)
    print(sc.render_report(report, fmt=args.format))
    return sc.EXIT_PARTIAL if report["warnings"] else sc.EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="psp-eval",
        description="Six-dimension accent scoring for Indic TTS bundles",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="check every bundle in a corpus")
    p.add_argument("corpus", type=Path)
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("centroids", help="build native/substitute centroids from a native corpus")
    p.add_argument("corpus", type=Path)
    p.add_argument("-o", "--out", type=Path, required=True)
    p.add_argument("--cap", type=int, default=cent.DEFAULT_CLIP_CAP, help="per-speaker clip cap")
    p.add_argument("--min-speakers", type=int, default=None, help="override per-language speaker minimum")
    _add_common(p)
    p.set_defaults(func=cmd_centroids)

    p = sub.add_parser("bank", help="build a reference bank (utterance embeddings + prosody)")
    p.add_argument("corpus", type=Path)
    p.add_argument("-o", "--out", type=Path, required=True)
    _add_common(p)
    p.set_defaults(func=cmd_bank)

    for name, help_text in (
        ("score", "score a system corpus against centroids and a reference bank"),
        ("sanity", "score held-out native audio as the language noise floor"),
    ):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("corpus", type=Path)
        p.add_argument("--centroids", type=Path, default=None)
        p.add_argument("--refs", type=Path, required=True)
        p.add_argument("-o", "--out", type=Path, required=True)
        p.add_argument("--floor", type=Path, default=None, help="native-floor scorecard for normalization")
        p.add_argument("--dump-utterances", type=Path, default=None, help="directory for per-utterance audit JSON")
        _add_common(p)
        p.set_defaults(func=cmd_score if name == "score" else cmd_sanity)

    p = sub.add_parser("report", help="render leaderboards from scorecards")
    p.add_argument("scorecards", type=Path, nargs="+")
    p.add_argument("--format", choices=("table", "json", "markdown"), default="table")
    p.set_defaults(func=cmd_report)
    return parser


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except PspError as e:
        print(f"error: {e}", file=sys.stderr)
        return sc.EXIT_VALIDATION
    except FileNotFoundError as e:
        print(f"error: {e}", file=sys.stderr)
        return sc.EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
