"""On-disk interchange formats shared by the extractor and the scoring engine.

Three artefacts live here:

* the ``PSPT`` binary tensor file (float32, 1-D or 2-D, little-endian),
* per-utterance bundle directories (manifest.json + three tensor files),
* the grapheme dimension-table config (native/substitute cognate pairs).
"""

from __future__ import annotations

import json
import math
import struct
import unicodedata
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

from .errors import (
    BadHeader,
    BadMagic,
    DimOverflow,
    MissingCognate,
    OverlappingSets,
    TruncatedPayload,
    UnknownLanguage,
    UnsupportedVersion,
)

MAGIC = b"PSPT"
TENSOR_VERSION = 1
DTYPE_FLOAT32 = 0
MAX_ELEMENTS = 2**31

LANGUAGES = ("te", "hi", "ta")
PER_PHONEME_DIMENSIONS = ("RR", "AF", "LF", "ZF")

# AF is linguistically absent for Tamil; ZF exists only for Tamil.
APPLICABLE_DIMENSIONS = {
    "te": ("RR", "AF", "LF"),
    "hi": ("RR", "AF", "LF"),
    "ta": ("RR", "LF", "ZF"),
}
NOT_APPLICABLE = {"ta": ("AF",)}

BUNDLE_SCHEMA = "psp_bundle_v1"
CORPUS_SCHEMA = "psp_corpus_v1"

# Format characters stripped before target extraction (ZWNJ/ZWJ show up in
# Indic text but carry no acoustic content).
_STRIP_FORMAT = {"‌", "‍", "﻿"}


# ---------------------------------------------------------------------------
# Tensor file
# ---------------------------------------------------------------------------

def write_tensor(path: str | Path, array: np.ndarray) -> None:
    """Write a 1-D or 2-D float array as a PSPT tensor file."""
    a = np.ascontiguousarray(np.asarray(array), dtype="<f4")
    if a.ndim not in (1, 2):
        raise BadHeader(f"tensor must be 1-D or 2-D, got ndim={a.ndim}")
    if any(d < 1 for d in a.shape):
        raise BadHeader(f"all dims must be >= 1, got shape={a.shape}")
    header = MAGIC + struct.pack("<BBB", TENSOR_VERSION, DTYPE_FLOAT32, a.ndim)
    header += struct.pack(f"<{a.ndim}I", *a.shape)
    Path(path).write_bytes(header + a.tobytes(order="C"))


def read_tensor(path: str | Path) -> np.ndarray:
    """Read a PSPT tensor file; rejects short and trailing payload bytes."""
    data = Path(path).read_bytes()
    if len(data) < 4 or data[:4] != MAGIC:
        raise BadMagic(f"{path}: not a PSPT tensor file")
    if len(data) < 7:
        raise TruncatedPayload(f"{path}: header truncated")
    version, dtype, ndim = struct.unpack("<BBB", data[4:7])
    if version != TENSOR_VERSION:
        raise UnsupportedVersion(f"{path}: version {version} not supported")
    if dtype != DTYPE_FLOAT32:
        raise UnsupportedVersion(f"{path}: dtype code {dtype} not supported")
    if ndim not in (1, 2):
        raise BadHeader(f"{path}: ndim must be 1 or 2, got {ndim}")
    offset = 7 + 4 * ndim
    if len(data) < offset:
        raise TruncatedPayload(f"{path}: dims truncated")
    dims = struct.unpack(f"<{ndim}I", data[7:offset])
    if any(d < 1 for d in dims):
        raise BadHeader(f"{path}: zero-sized dim in {dims}")
    n_elem = math.prod(dims)
    if n_elem > MAX_ELEMENTS:
        raise DimOverflow(f"{path}: {n_elem} elements exceeds 2^31")
    expected = offset + 4 * n_elem
    if len(data) != expected:
        raise TruncatedPayload(
            f"{path}: payload is {len(data) - offset} bytes, expected {4 * n_elem}"
        )
    flat = np.frombuffer(data, dtype="<f4", offset=offset)
    return flat.reshape(dims).copy()


# ---------------------------------------------------------------------------
# Utterance bundle
# ---------------------------------------------------------------------------

@dataclass
class UtteranceBundle:
    """One utterance's scoring inputs.

    ``emissions`` is a T x V matrix of per-frame log-probabilities over the
    aligner vocab, ``embeddings`` a T x D frame-embedding matrix on the same
    frame grid, ``f0_hz`` a length-T pitch track (0.0 = unvoiced).
    """

    id: str
    language: str
    text: str
    frame_hop_ms: float
    emissions: np.ndarray
    embeddings: np.ndarray
    f0_hz: np.ndarray
    vocab: list[str]
    blank_index: int
    duration_s: float
    speaker_id: str | None = None
    f0_method: str | None = None

    @property
    def n_frames(self) -> int:
        return int(self.emissions.shape[0])

    def vocab_index(self) -> dict[str, int]:
        return {g: i for i, g in enumerate(self.vocab)}


def validate_bundle(bundle: UtteranceBundle, row_tol: float = 1e-3) -> list[str]:
    """Check every bundle invariant; returns violation strings (empty = valid).

    Violations are data, not errors: callers decide whether to skip or abort.
    The check order is fixed so the result is deterministic.
    """
    v: list[str] = []
    if not bundle.id:
        v.append("id: empty")
    if bundle.language not in LANGUAGES:
        v.append(f"language: {bundle.language!r} not in {LANGUAGES}")
    if not (bundle.frame_hop_ms > 0):
        v.append(f"frame_hop_ms: must be > 0, got {bundle.frame_hop_ms}")
    if not (bundle.duration_s > 0):
        v.append(f"duration_s: must be > 0, got {bundle.duration_s}")

    em = np.asarray(bundle.emissions)
    eb = np.asarray(bundle.embeddings)
    f0 = np.asarray(bundle.f0_hz)
    if em.ndim != 2:
        v.append(f"emissions: expected 2-D matrix, got ndim={em.ndim}")
    if eb.ndim != 2:
        v.append(f"embeddings: expected 2-D matrix, got ndim={eb.ndim}")
    if f0.ndim != 1:
        v.append(f"f0_hz: expected 1-D vector, got ndim={f0.ndim}")
    if v:
        return v

    t = em.shape[0]
    if eb.shape[0] != t:
        v.append(f"embeddings: frame count mismatch ({eb.shape[0]} vs emissions {t})")
    if f0.shape[0] != t:
        v.append(f"f0_hz: frame count mismatch ({f0.shape[0]} vs emissions {t})")

    if em.shape[1] != len(bundle.vocab):
        v.append(f"vocab: {len(bundle.vocab)} entries but emissions have V={em.shape[1]}")
    if not (0 <= bundle.blank_index < em.shape[1]):
        v.append(f"blank_index: {bundle.blank_index} outside [0, {em.shape[1]})")

    lse = np.logaddexp.reduce(em.astype(np.float64), axis=1)
    bad = np.flatnonzero(~(np.abs(lse) <= row_tol))
    if bad.size:
        v.append(
            f"emissions: row not normalized at frame {int(bad[0])} "
            f"(logsumexp={lse[bad[0]]:.6g}, {bad.size} rows total)"
        )

    if not np.all(np.isfinite(eb)):
        v.append("embeddings: non-finite values")
    if np.any(f0 < 0) or not np.all(np.isfinite(f0)):
        v.append("f0_hz: values must be finite and >= 0")
    return v


def unknown_graphemes(bundle: UtteranceBundle) -> list[str]:
    """Text graphemes with no aligner-vocab entry (reconciliation warning path)."""
    _, _, dropped = text_to_targets(bundle.text, bundle.vocab)
    return dropped


# ---------------------------------------------------------------------------
# Text normalization
# ---------------------------------------------------------------------------

def text_to_targets(
    text: str, vocab: list[str]
) -> tuple[list[int], list[str], list[str]]:
    """Turn native-script text into an aligner target sequence.

    Rule, per script-agnostic convention: punctuation, whitespace, and
    zero-width format characters are stripped; remaining code points are
    grouped into grapheme clusters (base char plus trailing combining
    marks). A cluster that exists verbatim in the vocab becomes one target;
    otherwise each of its code points becomes a target when present in the
    vocab and is dropped (reported) when not.

    Returns (indices, graphemes, dropped).
    """
    vmap = {g: i for i, g in enumerate(vocab)}
    chars = []
    for ch in text:
        if ch in _STRIP_FORMAT or ch.isspace():
            continue
        cat = unicodedata.category(ch)
        if cat[0] in ("P", "Z") or cat == "Cf":
            continue
        chars.append(ch)

    clusters: list[str] = []
    for ch in chars:
        if clusters and unicodedata.category(ch) in ("Mn", "Mc"):
            clusters[-1] += ch
        else:
            clusters.append(ch)

    indices: list[int] = []
    graphemes: list[str] = []
    dropped: list[str] = []
    for cluster in clusters:
        if cluster in vmap:
            indices.append(vmap[cluster])
            graphemes.append(cluster)
            continue
        for ch in cluster:
            if ch in vmap:
                indices.append(vmap[ch])
                graphemes.append(ch)
            else:
                dropped.append(ch)
    return indices, graphemes, dropped


# ---------------------------------------------------------------------------
# Bundle / corpus directories
# ---------------------------------------------------------------------------

EMISSIONS_FILE = "emissions.pspt"
EMBEDDINGS_FILE = "embeddings.pspt"
F0_FILE = "f0.pspt"
BUNDLE_MANIFEST = "manifest.json"
CORPUS_MANIFEST = "corpus.json"


def write_bundle(directory: str | Path, bundle: UtteranceBundle) -> Path:
    """Write one bundle as a directory of manifest + three tensor files."""
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    write_tensor(d / EMISSIONS_FILE, bundle.emissions)
    write_tensor(d / EMBEDDINGS_FILE, bundle.embeddings)
    write_tensor(d / F0_FILE, bundle.f0_hz)
    manifest = {
        "schema": BUNDLE_SCHEMA,
        "id": bundle.id,
        "language": bundle.language,
        "text": bundle.text,
        "frame_hop_ms": bundle.frame_hop_ms,
        "duration_s": bundle.duration_s,
        "speaker_id": bundle.speaker_id,
        "blank_index": bundle.blank_index,
        "vocab": bundle.vocab,
        "f0_method": bundle.f0_method,
        "files": {
            "emissions": EMISSIONS_FILE,
            "embeddings": EMBEDDINGS_FILE,
            "f0": F0_FILE,
        },
    }
    (d / BUNDLE_MANIFEST).write_text(
        json.dumps(manifest, ensure_ascii=False, indent=2), encoding="utf-8"
    )
    return d


def load_bundle(directory: str | Path) -> UtteranceBundle:
    d = Path(directory)
    manifest = json.loads((d / BUNDLE_MANIFEST).read_text(encoding="utf-8"))
    files = manifest.get("files", {})
    return UtteranceBundle(
        id=manifest["id"],
        language=manifest["language"],
        text=manifest["text"],
        frame_hop_ms=float(manifest["frame_hop_ms"]),
        emissions=read_tensor(d / files.get("emissions", EMISSIONS_FILE)),
        embeddings=read_tensor(d / files.get("embeddings", EMBEDDINGS_FILE)),
        f0_hz=read_tensor(d / files.get("f0", F0_FILE)),
        vocab=list(manifest["vocab"]),
        blank_index=int(manifest["blank_index"]),
        duration_s=float(manifest["duration_s"]),
        speaker_id=manifest.get("speaker_id"),
        f0_method=manifest.get("f0_method"),
    )


@dataclass
class CorpusManifest:
    corpus_id: str
    language: str
    system: str | None
    utterances: list[dict]  # each: {"id", "path", "speaker_id"}
    root: Path = field(default_factory=Path)

    def bundle_dir(self, entry: dict) -> Path:
        return self.root / entry["path"]

    def ids(self) -> list[str]:
        return [u["id"] for u in self.utterances]


def write_corpus_manifest(
    directory: str | Path,
    corpus_id: str,
    language: str,
    utterances: list[dict],
    system: str | None = None,
) -> Path:
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    doc = {
        "schema": CORPUS_SCHEMA,
        "corpus_id": corpus_id,
        "language": language,
        "system": system,
        "utterances": utterances,
    }
    path = d / CORPUS_MANIFEST
    path.write_text(json.dumps(doc, ensure_ascii=False, indent=2), encoding="utf-8")
    return path


def load_corpus(directory: str | Path) -> CorpusManifest:
    d = Path(directory)
    doc = json.loads((d / CORPUS_MANIFEST).read_text(encoding="utf-8"))
    if doc.get("schema") != CORPUS_SCHEMA:
        raise UnsupportedVersion(f"{d}: unknown corpus schema {doc.get('schema')!r}")
    return CorpusManifest(
        corpus_id=doc["corpus_id"],
        language=doc["language"],
        system=doc.get("system"),
        utterances=list(doc["utterances"]),
        root=d,
    )


def iter_bundles(manifest: CorpusManifest):
    for entry in manifest.utterances:
        yield load_bundle(manifest.bundle_dir(entry))


# ---------------------------------------------------------------------------
# Dimension tables
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class DimensionTable:
    """Native/substitute grapheme parameterisation of one probe dimension."""

    language: str
    dimension: str
    native_graphemes: frozenset[str]
    substitute_graphemes: frozenset[str]
    cognate_map: dict[str, str]


def make_table(
    language: str,
    dimension: str,
    native: frozenset[str] | set[str],
    substitutes: frozenset[str] | set[str],
    cognate_map: dict[str, str],
) -> DimensionTable:
    """Construct a table, enforcing set disjointness and cognate totality."""
    native = frozenset(native)
    substitutes = frozenset(substitutes)
    overlap = native & substitutes
    if overlap:
        raise OverlappingSets(
            f"{language}/{dimension}: graphemes in both sets: {sorted(overlap)}"
        )
    for g in native:
        if g not in cognate_map:
            raise MissingCognate(f"{language}/{dimension}: no cognate for {g!r}")
        if cognate_map[g] not in substitutes:
            raise MissingCognate(
                f"{language}/{dimension}: cognate {cognate_map[g]!r} outside substitute set"
            )
    return DimensionTable(language, dimension, native, substitutes, dict(cognate_map))


def _table_from_pairs(language: str, dimension: str, pairs: dict[str, str]) -> DimensionTable:
    return make_table(language, dimension, set(pairs.keys()), set(pairs.values()), pairs)


def default_tables_path() -> Path:
    return Path(str(resources.files("psp_eval").joinpath("data/dimension_tables.json")))


def load_dimension_tables(path: str | Path | None = None) -> list[DimensionTable]:
    """Load the grapheme config; one table per (language, applicable dimension)."""
    p = Path(path) if path is not None else default_tables_path()
    doc = json.loads(p.read_text(encoding="utf-8"))
    tables: list[DimensionTable] = []
    for language, spec in doc["languages"].items():
        if language not in LANGUAGES:
            raise UnknownLanguage(f"{p}: unknown language {language!r}")
        for dimension, body in spec["dimensions"].items():
            if dimension not in PER_PHONEME_DIMENSIONS:
                raise UnknownLanguage(f"{p}: unknown dimension {dimension!r}")
            tables.append(_table_from_pairs(language, dimension, body["pairs"]))
    return tables


def load_lf_priors(path: str | Path | None = None) -> dict[str, float | None]:
    """Per-language long/short duration-ratio priors from the config file."""
    p = Path(path) if path is not None else default_tables_path()
    doc = json.loads(p.read_text(encoding="utf-8"))
    return {
        lang: spec.get("lf_native_ratio")
        for lang, spec in doc["languages"].items()
    }


def tables_for(tables: list[DimensionTable], language: str) -> dict[str, DimensionTable]:
    return {t.dimension: t for t in tables if t.language == language}
