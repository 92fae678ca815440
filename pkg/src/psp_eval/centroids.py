"""Native/substitute centroid construction and reference banks.

Centroids come from greedy-decoded native corpora: every frame whose argmax
label matches a table grapheme (and whose utterance text actually contains
that grapheme) joins the bag; the centroid is the bag mean. Substitute bags
use the cognate grapheme, drawn only from utterances that contributed to the
corresponding native bag, so both sides share mic/room/speaker conditions.
"""

from __future__ import annotations

import json
import logging
from collections import defaultdict
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .ctc_align import align_bundle, greedy_frames
from .distributional import prosodic_vector
from .errors import PspError, TooFewSpeakers
from .interchange import (
    CorpusManifest,
    DimensionTable,
    UtteranceBundle,
    read_tensor,
    tables_for,
    write_tensor,
)

log = logging.getLogger(__name__)

DEFAULT_CLIP_CAP = 25
MIN_SPEAKERS = {"te": 20, "ta": 20, "hi": 40}

CENTROID_SCHEMA = "psp_centroids_v1"
BANK_SCHEMA = "psp_bank_v1"


@dataclass
class CentroidEntry:
    native_centroid: np.ndarray
    substitute_centroid: np.ndarray
    native_count: int
    substitute_count: int


@dataclass
class CentroidSet:
    language: str
    entries: dict[tuple[str, str], CentroidEntry]  # (dimension, native grapheme)
    provenance: dict = field(default_factory=dict)


@dataclass
class ReferenceBank:
    language: str
    utterance_embeddings: np.ndarray  # (N, D)
    prosodic_matrix: np.ndarray  # (M, 5)
    source: dict = field(default_factory=dict)


def sample_corpus(
    manifest: CorpusManifest,
    cap: int = DEFAULT_CLIP_CAP,
    min_speakers: int | None = None,
    seed: int = 0,
) -> list[str]:
    """Uniform per-speaker sample of utterance ids, clip cap enforced.

    Deterministic for a fixed seed: speakers are visited in sorted order and
    each speaker's ids are shuffled by an independent substream.
    """
    if min_speakers is None:
        min_speakers = MIN_SPEAKERS.get(manifest.language, 20)
    by_speaker: dict[str, list[str]] = defaultdict(list)
    for u in manifest.utterances:
        by_speaker[str(u.get("speaker_id"))].append(u["id"])
    if len(by_speaker) < min_speakers:
        raise TooFewSpeakers(
            f"{manifest.corpus_id}: {len(by_speaker)} speakers < required {min_speakers}"
        )
    chosen: list[str] = []
    for i, speaker in enumerate(sorted(by_speaker)):
        ids = sorted(by_speaker[speaker])
        if len(ids) > cap:
            rng = np.random.default_rng([seed, i])
            ids = [ids[j] for j in rng.permutation(len(ids))[:cap]]
        chosen.extend(ids)
    return sorted(chosen)


def _bundle_contributions(
    bundle: UtteranceBundle, tables: dict[str, DimensionTable]
) -> dict[tuple[str, str], tuple[np.ndarray | None, int, np.ndarray | None, int]]:
    """Per-entry (native_sum, native_count, sub_sum, sub_count) for one bundle.

    Frames are credited only when the grapheme appears in the utterance text
    (guards against aligner hallucination); substitute frames are returned
    alongside but only merged for bundles with native frames.
    """
    greedy = greedy_frames(bundle.emissions)
    vmap = bundle.vocab_index()
    emb = np.asarray(bundle.embeddings, dtype=np.float64)
    out = {}
    for dim in sorted(tables):
        table = tables[dim]
        for g in sorted(table.native_graphemes):
            if g not in bundle.text or g not in vmap:
                continue
            mask = greedy == vmap[g]
            n_nat = int(mask.sum())
            nat_sum = emb[mask].sum(axis=0) if n_nat else None
            c = table.cognate_map[g]
            n_sub = 0
            sub_sum = None
            if c in bundle.text and c in vmap:
                smask = greedy == vmap[c]
                n_sub = int(smask.sum())
                sub_sum = emb[smask].sum(axis=0) if n_sub else None
            if n_nat or n_sub:
                out[(dim, g)] = (nat_sum, n_nat, sub_sum, n_sub)
    return out


def build_centroids(
    bundles: list[UtteranceBundle],
    tables: list[DimensionTable],
    corpus_id: str = "",
    extra_provenance: dict | None = None,
) -> CentroidSet:
    """Accumulate per-(dimension, grapheme) centroid pairs over a native corpus.

    Entries missing either a native or a substitute bag are omitted with a
    warning. Bundles are processed in id order and per-entry sums are reduced
    with numpy's pairwise summation, so the result is independent of input
    ordering.
    """
    if not bundles:
        raise PspError("no bundles to build centroids from")
    language = bundles[0].language
    lang_tables = tables_for(tables, language)
    ordered = sorted(bundles, key=lambda b: b.id)

    nat_parts: dict[tuple[str, str], list[np.ndarray]] = defaultdict(list)
    nat_counts: dict[tuple[str, str], int] = defaultdict(int)
    sub_parts: dict[tuple[str, str], list[np.ndarray]] = defaultdict(list)
    sub_counts: dict[tuple[str, str], int] = defaultdict(int)
    per_speaker: dict[str, int] = defaultdict(int)

    for bundle in ordered:
        per_speaker[bundle.speaker_id or "unknown"] += 1
        for key, (nat_sum, n_nat, sub_sum, n_sub) in _bundle_contributions(
            bundle, lang_tables
        ).items():
            if n_nat == 0:
                continue  # acoustic-channel parity: substitute frames need a native contribution
            nat_parts[key].append(nat_sum)
            nat_counts[key] += n_nat
            if n_sub:
                sub_parts[key].append(sub_sum)
                sub_counts[key] += n_sub

    entries: dict[tuple[str, str], CentroidEntry] = {}
    for key in sorted(nat_parts):
        if sub_counts[key] == 0:
            log.warning(
                "centroid entry %s/%s omitted: empty substitute bag", key[0], key[1]
            )
            continue
        nat_total = np.sum(np.stack(nat_parts[key]), axis=0)
        sub_total = np.sum(np.stack(sub_parts[key]), axis=0)
        entries[key] = CentroidEntry(
            native_centroid=nat_total / nat_counts[key],
            substitute_centroid=sub_total / sub_counts[key],
            native_count=nat_counts[key],
            substitute_count=sub_counts[key],
        )

    provenance = {
        "corpus_id": corpus_id,
        "speaker_count": len(per_speaker),
        "per_speaker_clips": dict(sorted(per_speaker.items())),
        "bundle_ids": [b.id for b in ordered],
    }
    if extra_provenance:
        provenance.update(extra_provenance)
    return CentroidSet(language=language, entries=entries, provenance=provenance)


def compute_lf_native_ratio(
    bundles: list[UtteranceBundle], tables: list[DimensionTable]
) -> float | None:
    """Pooled long/short vowel duration ratio over a native corpus.

    Used to fill the LF prior for languages whose config leaves it null.
    """
    if not bundles:
        return None
    lang_tables = tables_for(tables, bundles[0].language)
    lf = lang_tables.get("LF")
    if lf is None:
        return None
    longs: list[int] = []
    shorts: list[int] = []
    for bundle in sorted(bundles, key=lambda b: b.id):
        try:
            spans, _ = align_bundle(bundle)
        except PspError as e:
            log.warning("%s: skipped for LF prior (%s)", bundle.id, e)
            continue
        except ValueError:
            continue
        longs.extend(s.n_frames for s in spans if s.grapheme in lf.native_graphemes)
        shorts.extend(s.n_frames for s in spans if s.grapheme in lf.substitute_graphemes)
    if not longs or not shorts:
        return None
    ratio = (sum(longs) / len(longs)) / (sum(shorts) / len(shorts))
    return float(ratio) if ratio > 1.0 else None


def utterance_embedding(bundle: UtteranceBundle) -> np.ndarray:
    """Mean frame embedding, excluding frames greedy-labelled as blank.

    Silence-dominated frames would otherwise pull every utterance toward a
    common silence vector. Falls back to all frames when nothing is voiced.
    """
    greedy = greedy_frames(bundle.emissions)
    emb = np.asarray(bundle.embeddings, dtype=np.float64)
    mask = greedy != bundle.blank_index
    if not mask.any():
        return emb.mean(axis=0)
    return emb[mask].mean(axis=0)


def build_reference_bank(bundles: list[UtteranceBundle]) -> ReferenceBank:
    """Utterance-level embedding bank plus prosodic feature matrix.

    Utterances that cannot be aligned or have no voiced frames drop out of
    the prosodic matrix (warned), not out of the embedding bank.
    """
    if not bundles:
        raise PspError("no bundles to build a reference bank from")
    ordered = sorted(bundles, key=lambda b: b.id)
    embs = []
    pros = []
    pros_ids = []
    for bundle in ordered:
        embs.append(utterance_embedding(bundle))
        try:
            spans, _ = align_bundle(bundle)
            pros.append(prosodic_vector(bundle, spans).as_array())
            pros_ids.append(bundle.id)
        except (PspError, ValueError) as e:
            log.warning("%s: excluded from prosodic matrix (%s)", bundle.id, e)
    return ReferenceBank(
        language=ordered[0].language,
        utterance_embeddings=np.stack(embs),
        prosodic_matrix=np.stack(pros) if pros else np.empty((0, 5)),
        source={
            "n_utterances": len(ordered),
            "bundle_ids": [b.id for b in ordered],
            "prosodic_ids": pros_ids,
        },
    )


# ---------------------------------------------------------------------------
# Serialization: centroid directory and bank directory
# ---------------------------------------------------------------------------

def save_centroids(directory: str | Path, cs: CentroidSet) -> Path:
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    index_entries = []
    for i, key in enumerate(sorted(cs.entries)):
        entry = cs.entries[key]
        nat_file = f"ent{i:04d}_nat.pspt"
        sub_file = f"ent{i:04d}_sub.pspt"
        write_tensor(d / nat_file, entry.native_centroid)
        write_tensor(d / sub_file, entry.substitute_centroid)
        index_entries.append(
            {
                "dimension": key[0],
                "grapheme": key[1],
                "native_count": entry.native_count,
                "substitute_count": entry.substitute_count,
                "native_file": nat_file,
                "substitute_file": sub_file,
            }
        )
    index = {
        "schema": CENTROID_SCHEMA,
        "language": cs.language,
        "entries": index_entries,
        "provenance": cs.provenance,
    }
    (d / "index.json").write_text(
        json.dumps(index, ensure_ascii=False, indent=2), encoding="utf-8"
    )
    return d


def load_centroids(directory: str | Path) -> CentroidSet:
    d = Path(directory)
    index = json.loads((d / "index.json").read_text(encoding="utf-8"))
    entries = {}
    for e in index["entries"]:
        entries[(e["dimension"], e["grapheme"])] = CentroidEntry(
            native_centroid=read_tensor(d / e["native_file"]).astype(np.float64),
            substitute_centroid=read_tensor(d / e["substitute_file"]).astype(np.float64),
            native_count=int(e["native_count"]),
            substitute_count=int(e["substitute_count"]),
        )
    return CentroidSet(
        language=index["language"], entries=entries, provenance=index.get("provenance", {})
    )


def save_bank(directory: str | Path, bank: ReferenceBank) -> Path:
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    write_tensor(d / "utterance_embeddings.pspt", bank.utterance_embeddings)
    has_prosody = bank.prosodic_matrix.shape[0] > 0
    if has_prosody:
        write_tensor(d / "prosodic_matrix.pspt", bank.prosodic_matrix)
    doc = {
        "schema": BANK_SCHEMA,
        "language": bank.language,
        "has_prosody": has_prosody,
        "source": bank.source,
    }
    (d / "bank.json").write_text(
        json.dumps(doc, ensure_ascii=False, indent=2), encoding="utf-8"
    )
    return d


def load_bank(directory: str | Path) -> ReferenceBank:
    d = Path(directory)
    doc = json.loads((d / "bank.json").read_text(encoding="utf-8"))
    if doc.get("has_prosody", True):
        prosodic = read_tensor(d / "prosodic_matrix.pspt").astype(np.float64)
    else:
        prosodic = np.empty((0, 5))
    return ReferenceBank(
        language=doc["language"],
        utterance_embeddings=read_tensor(d / "utterance_embeddings.pspt").astype(np.float64),
        prosodic_matrix=prosodic,
        source=doc.get("source", {}),
    )
