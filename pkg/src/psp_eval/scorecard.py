"""End-to-end corpus scoring and the scorecard artefact.

A scorecard holds the six dimension results for one (system, language) run:
per-phoneme probe scores with bootstrap CIs, the two Fréchet numbers, token
counts, warnings, and a config fingerprint. Serialization is canonical
(sorted keys, floats at 17 significant digits) so identical inputs and seed
produce byte-identical JSON.
"""

from __future__ import annotations

import hashlib
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .bootstrap import BootstrapConfig, bootstrap_ci
from .centroids import CentroidSet, ReferenceBank, utterance_embedding
from .ctc_align import align_bundle
from .distributional import FrechetResult, fit_gaussian, frechet, prosodic_vector, psd
from .errors import (
    DegenerateFloor,
    EmptyInput,
    OverlapWithCentroidCorpus,
    PspError,
)
from .interchange import (
    APPLICABLE_DIMENSIONS,
    NOT_APPLICABLE,
    CorpusManifest,
    DimensionTable,
    load_bundle,
    tables_for,
    validate_bundle,
)
from .probes import DimensionScore, TokenFidelity, aggregate, lf_fidelity, score_per_phoneme

log = logging.getLogger(__name__)

SCORECARD_SCHEMA = "psp_scorecard_v1"

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_PARTIAL = 2


@dataclass
class ScoringOptions:
    tau: float = 0.5
    eps: float = 1e-6
    zscore_psd: bool = False
    bootstrap: BootstrapConfig = field(default_factory=BootstrapConfig)
    dump_dir: Path | None = None


# ---------------------------------------------------------------------------
# Canonical JSON
# ---------------------------------------------------------------------------

def _fmt(value) -> str:
    if isinstance(value, np.bool_):
        value = bool(value)
    elif isinstance(value, np.integer):
        value = int(value)
    elif isinstance(value, np.floating):
        value = float(value)
    if value is None:
        return "null"
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        if value != value or value in (float("inf"), float("-inf")):
            return json.dumps(str(value))
        return format(value, ".17g")
    if isinstance(value, int):
        return str(value)
    if isinstance(value, str):
        return json.dumps(value, ensure_ascii=False)
    if isinstance(value, dict):
        items = ",".join(f"{json.dumps(str(k), ensure_ascii=False)}:{_fmt(v)}"
                         for k, v in sorted(value.items()))
        return "{" + items + "}"
    if isinstance(value, (list, tuple)):
        return "[" + ",".join(_fmt(v) for v in value) + "]"
    raise TypeError(f"cannot serialize {type(value)!r}")


def canonical_json(doc: dict) -> str:
    """Deterministic JSON: sorted keys, floats at 17 significant digits."""
    return _fmt(doc)


def config_fingerprint(
    centroids: CentroidSet, tables: list[DimensionTable], options: ScoringOptions
) -> str:
    payload = {
        "centroid_language": centroids.language,
        "centroid_provenance": {
            k: v for k, v in sorted(centroids.provenance.items()) if k != "bundle_ids"
        },
        "centroid_entries": [
            [dim, g, centroids.entries[(dim, g)].native_count,
             centroids.entries[(dim, g)].substitute_count]
            for dim, g in sorted(centroids.entries)
        ],
        "tables": [
            [t.language, t.dimension, sorted(t.cognate_map.items())]
            for t in sorted(tables, key=lambda t: (t.language, t.dimension))
        ],
        "tau": options.tau,
        "eps": options.eps,
        "zscore_psd": options.zscore_psd,
        "bootstrap": {
            "replicates": options.bootstrap.replicates,
            "alpha": options.bootstrap.alpha,
            "seed": options.bootstrap.seed,
            "resample_unit": options.bootstrap.resample_unit,
        },
    }
    digest = hashlib.sha256(canonical_json(payload).encode("utf-8")).hexdigest()
    return f"sha256:{digest}"


# ---------------------------------------------------------------------------
# Scoring pipeline
# ---------------------------------------------------------------------------

def _dimension_doc(score: DimensionScore, status: str = "scored") -> dict:
    return {
        "status": status,
        "mean_fidelity": score.mean_fidelity,
        "collapse_rate": score.collapse_rate,
        "n_tokens": score.n_tokens,
        "ci_low": score.ci_low,
        "ci_high": score.ci_high,
        "collapse_ci_low": score.collapse_ci_low,
        "collapse_ci_high": score.collapse_ci_high,
        "normalized": score.normalized,
    }


def _empty_dimension_doc(status: str) -> dict:
    return {
        "status": status,
        "mean_fidelity": None,
        "collapse_rate": None,
        "n_tokens": 0,
        "ci_low": None,
        "ci_high": None,
        "collapse_ci_low": None,
        "collapse_ci_high": None,
        "normalized": None,
    }


def _frechet_doc(result: FrechetResult) -> dict:
    return {
        "status": "scored",
        "total": result.total,
        "mean_dist": result.mean_dist,
        "trace_term": result.trace_term,
    }


def _resolve_lf_prior(
    language: str, centroids: CentroidSet, lf_priors: dict[str, float | None]
) -> float | None:
    prior = lf_priors.get(language)
    if prior is None:
        prior = centroids.provenance.get("lf_native_ratio")
    return prior


def score_corpus(
    manifest: CorpusManifest,
    centroids: CentroidSet,
    bank: ReferenceBank,
    tables: list[DimensionTable],
    lf_priors: dict[str, float | None],
    options: ScoringOptions | None = None,
    native_floor: bool = False,
) -> tuple[dict, int]:
    """Score every bundle in a corpus; returns (scorecard doc, exit code).

    Utterances that fail validation or alignment are skipped with a warning
    and the run is marked partial (exit code 2) rather than aborted.
    """
    options = options or ScoringOptions()
    language = manifest.language
    if centroids.language != language:
        raise PspError(
            f"centroid language {centroids.language!r} != corpus language {language!r}"
        )
    if bank.language != language:
        raise PspError(f"bank language {bank.language!r} != corpus language {language!r}")

    lang_tables = tables_for(tables, language)
    warnings: list[str] = []
    tokens_by_dim: dict[str, dict[str, list[TokenFidelity]]] = {
        d: {} for d in APPLICABLE_DIMENSIONS[language] if d != "LF"
    }
    lf_values: dict[str, float] = {}
    embeddings = []
    prosody = []
    dumps = []
    n_scored = 0

    lf_prior = _resolve_lf_prior(language, centroids, lf_priors)
    if "LF" in APPLICABLE_DIMENSIONS[language] and lf_prior is None:
        warnings.append("LF: no native duration-ratio prior available; LF skipped")

    for entry in sorted(manifest.utterances, key=lambda u: u["id"]):
        try:
            bundle = load_bundle(manifest.bundle_dir(entry))
        except Exception as e:  # unreadable bundle: report and move on
            warnings.append(f"{entry['id']}: unreadable bundle ({e})")
            continue
        violations = validate_bundle(bundle)
        if violations:
            warnings.append(f"{bundle.id}: invalid bundle ({'; '.join(violations)})")
            continue
        try:
            spans, dropped = align_bundle(bundle)
        except (PspError, ValueError) as e:
            warnings.append(f"{bundle.id}: alignment failed ({e})")
            continue
        if dropped:
            log.info("%s: %d graphemes not in aligner vocab", bundle.id, len(dropped))

        n_scored += 1
        embeddings.append(utterance_embedding(bundle))
        try:
            prosody.append(prosodic_vector(bundle, spans).as_array())
        except PspError as e:
            warnings.append(f"{bundle.id}: no prosodic vector ({e})")

        utt_dump = {"id": bundle.id, "dimensions": {}}
        for dim, table in lang_tables.items():
            if dim == "LF":
                if lf_prior is None:
                    continue
                value = lf_fidelity(spans, table, lf_prior)
                if value is not None:
                    lf_values[bundle.id] = value
                    utt_dump["dimensions"]["LF"] = value
                continue
            toks = score_per_phoneme(bundle, spans, table, centroids, tau=options.tau)
            if toks:
                tokens_by_dim[dim][bundle.id] = toks
                utt_dump["dimensions"][dim] = [
                    {"grapheme": t.grapheme, "fidelity": t.fidelity, "collapsed": t.collapsed}
                    for t in toks
                ]
        dumps.append(utt_dump)

    per_dimension: dict[str, dict] = {}
    for dim in APPLICABLE_DIMENSIONS[language]:
        if dim == "LF":
            per_dimension[dim] = _lf_dimension_doc(lf_values, options)
            continue
        per_utt = tokens_by_dim[dim]
        if not per_utt:
            per_dimension[dim] = _empty_dimension_doc("no_tokens")
            warnings.append(f"{dim}: no scoreable tokens in corpus")
            continue
        all_tokens = [t for toks in per_utt.values() for t in toks]
        score = aggregate(all_tokens, level="corpus")
        groups_fid = [[t.fidelity for t in per_utt[u]] for u in sorted(per_utt)]
        groups_col = [[float(t.collapsed) for t in per_utt[u]] for u in sorted(per_utt)]
        score.ci_low, score.ci_high = bootstrap_ci(
            groups_fid, "pooled_mean", options.bootstrap
        )
        score.collapse_ci_low, score.collapse_ci_high = bootstrap_ci(
            groups_col, "collapse_rate", options.bootstrap
        )
        per_dimension[dim] = _dimension_doc(score)
    for dim in NOT_APPLICABLE.get(language, ()):
        per_dimension[dim] = _empty_dimension_doc("n/a")

    fad_doc, psd_doc = _distributional_docs(
        embeddings, prosody, bank, options, warnings
    )

    doc = {
        "schema": SCORECARD_SCHEMA,
        "system": manifest.system or manifest.corpus_id,
        "language": language,
        "corpus_id": manifest.corpus_id,
        "n_wavs": n_scored,
        "native_floor": native_floor,
        "per_dimension": per_dimension,
        "fad": fad_doc,
        "psd": psd_doc,
        "eps": options.eps,
        "tau": options.tau,
        "lf_native_ratio": lf_prior,
        "config_fingerprint": "",
        "scored_ids": sorted(d["id"] for d in dumps),
        "warnings": sorted(warnings),
    }
    if options.dump_dir is not None:
        options.dump_dir.mkdir(parents=True, exist_ok=True)
        for utt_dump in dumps:
            path = options.dump_dir / f"{utt_dump['id']}.json"
            path.write_text(canonical_json(utt_dump), encoding="utf-8")

    if n_scored == 0:
        return doc, EXIT_VALIDATION
    return doc, (EXIT_PARTIAL if warnings else EXIT_OK)


def _lf_dimension_doc(lf_values: dict[str, float], options: ScoringOptions) -> dict:
    if not lf_values:
        return _empty_dimension_doc("no_tokens")
    values = [lf_values[u] for u in sorted(lf_values)]
    arr = np.asarray(values)
    doc = _empty_dimension_doc("scored")
    doc["mean_fidelity"] = float(arr.mean())
    doc["collapse_rate"] = float((arr < options.tau).mean())
    doc["n_tokens"] = len(values)
    try:
        doc["ci_low"], doc["ci_high"] = bootstrap_ci(
            [[v] for v in values], "pooled_mean", options.bootstrap
        )
        doc["collapse_ci_low"], doc["collapse_ci_high"] = bootstrap_ci(
            [[float(v < options.tau)] for v in values], "collapse_rate", options.bootstrap
        )
    except EmptyInput:
        pass
    return doc


def _distributional_docs(embeddings, prosody, bank, options, warnings):
    if len(embeddings) >= 2:
        try:
            result = frechet(
                fit_gaussian(np.stack(embeddings)),
                fit_gaussian(bank.utterance_embeddings),
                eps=options.eps,
            )
            fad_doc = _frechet_doc(result)
        except PspError as e:
            warnings.append(f"FAD: failed ({e})")
            fad_doc = {"status": "error", "total": None, "mean_dist": None, "trace_term": None}
    else:
        warnings.append("FAD: fewer than 2 scored utterances")
        fad_doc = {"status": "error", "total": None, "mean_dist": None, "trace_term": None}

    if len(prosody) >= 2 and bank.prosodic_matrix.shape[0] >= 2:
        try:
            result = psd(
                np.stack(prosody), bank.prosodic_matrix,
                eps=options.eps, zscore=options.zscore_psd,
            )
            psd_doc = _frechet_doc(result)
            psd_doc["zscore"] = options.zscore_psd
        except PspError as e:
            warnings.append(f"PSD: failed ({e})")
            psd_doc = {"status": "error", "total": None, "mean_dist": None, "trace_term": None}
    else:
        warnings.append("PSD: fewer than 2 prosodic vectors on either side")
        psd_doc = {"status": "error", "total": None, "mean_dist": None, "trace_term": None}
    return fad_doc, psd_doc


def check_sanity_disjoint(manifest: CorpusManifest, centroids: CentroidSet) -> None:
    """Held-out native sets must not overlap the centroid corpus."""
    held = set(manifest.ids())
    used = set(centroids.provenance.get("bundle_ids", []))
    overlap = held & used
    if overlap:
        raise OverlapWithCentroidCorpus(
            f"{len(overlap)} utterances shared with centroid corpus: "
            f"{sorted(overlap)[:5]}"
        )


def apply_noise_floor(doc: dict, floor_doc: dict) -> dict:
    """Fill each dimension's normalized field from a native-floor scorecard."""
    from .probes import normalize_floor

    if floor_doc.get("language") != doc.get("language"):
        raise PspError("floor scorecard language does not match")
    for dim, body in doc["per_dimension"].items():
        floor_body = floor_doc["per_dimension"].get(dim)
        if not floor_body or body["status"] != "scored" or floor_body["status"] != "scored":
            continue
        try:
            body["normalized"] = normalize_floor(
                body["mean_fidelity"], floor_body["mean_fidelity"]
            )
        except DegenerateFloor:
            doc["warnings"] = sorted(
                set(doc["warnings"]) | {f"{dim}: degenerate noise floor (native at ceiling)"}
            )
    return doc


def write_scorecard(path: str | Path, doc: dict) -> None:
    Path(path).write_text(canonical_json(doc) + "\n", encoding="utf-8")


def load_scorecard(path: str | Path) -> dict:
    return json.loads(Path(path).read_text(encoding="utf-8"))


# ---------------------------------------------------------------------------
# Reports
# ---------------------------------------------------------------------------

FIDELITY_DIMS = ("RR", "AF", "LF", "ZF")


def _leaderboard_rows(cards: list[dict], dim: str) -> list[tuple[str, float]]:
    rows = []
    for c in cards:
        body = c["per_dimension"].get(dim)
        if body and body["status"] == "scored":
            rows.append((c["system"], body["mean_fidelity"]))
    # higher fidelity is better; ties break lexicographically by system
    return sorted(rows, key=lambda r: (-r[1], r[0]))


def _distributional_rows(cards: list[dict], key: str) -> list[tuple[str, float]]:
    rows = [
        (c["system"], c[key]["total"])
        for c in cards
        if c[key]["status"] == "scored"
    ]
    return sorted(rows, key=lambda r: (r[1], r[0]))  # lower is better


def cross_language_deltas(cards: list[dict], frm: str = "hi", to: str = "ta") -> list[dict]:
    """Per-system FAD percentage change between two languages."""
    by_system: dict[str, dict[str, dict]] = {}
    for c in cards:
        by_system.setdefault(c["system"], {})[c["language"]] = c
    out = []
    for system in sorted(by_system):
        pair = by_system[system]
        if frm in pair and to in pair:
            a, b = pair[frm]["fad"], pair[to]["fad"]
            if a["status"] == "scored" and b["status"] == "scored" and a["total"]:
                out.append(
                    {
                        "system": system,
                        f"fad_{frm}": a["total"],
                        f"fad_{to}": b["total"],
                        "delta_pct": (b["total"] - a["total"]) / a["total"] * 100.0,
                    }
                )
    return out


def build_report(cards: list[dict]) -> dict:
    """Leaderboards per (language, dimension) plus cross-language deltas."""
    warnings = []
    by_language: dict[str, list[dict]] = {}
    for c in cards:
        by_language.setdefault(c["language"], []).append(c)
    for language, group in by_language.items():
        prints = {c["config_fingerprint"] for c in group}
        if len(prints) > 1:
            warnings.append(
                f"FingerprintMismatch: {language} scorecards mix {len(prints)} configs"
            )
    leaderboards = {}
    for language, group in sorted(by_language.items()):
        boards = {}
        for dim in FIDELITY_DIMS:
            rows = _leaderboard_rows(group, dim)
            if rows:
                boards[dim] = [{"system": s, "mean_fidelity": v} for s, v in rows]
        for key in ("fad", "psd"):
            rows = _distributional_rows(group, key)
            if rows:
                boards[key.upper()] = [{"system": s, "total": v} for s, v in rows]
        leaderboards[language] = boards
    return {
        "schema": "psp_report_v1",
        "leaderboards": leaderboards,
        "cross_language_fad": cross_language_deltas(cards),
        "warnings": warnings,
    }


def render_report(report: dict, fmt: str = "table") -> str:
    if fmt == "json":
        return canonical_json(report)
    lines = []
    md = fmt == "markdown"
    for language, boards in report["leaderboards"].items():
        lines.append(f"## {language}" if md else f"=== {language} ===")
        for dim, rows in boards.items():
            lines.append(f"### {dim}" if md else f"-- {dim} --")
            if md:
                key = "mean_fidelity" if "mean_fidelity" in rows[0] else "total"
                lines.append(f"| rank | system | {key} |")
                lines.append("|---|---|---|")
                for i, row in enumerate(rows, 1):
                    lines.append(f"| {i} | {row['system']} | {row[key]:.4g} |")
            else:
                for i, row in enumerate(rows, 1):
                    value = row.get("mean_fidelity", row.get("total"))
                    lines.append(f"{i:2d}. {row['system']:<30s} {value:.4g}")
        lines.append("")
    deltas = report["cross_language_fad"]
    if deltas:
        lines.append("## FAD hi->ta" if md else "=== FAD trajectory hi -> ta ===")
        for row in deltas:
            lines.append(
                f"{row['system']:<30s} {row['fad_hi']:.4g} -> {row['fad_ta']:.4g} "
                f"({row['delta_pct']:+.1f}%)"
            )
    for w in report["warnings"]:
        lines.append(f"WARNING: {w}")
    return "\n".join(lines)
