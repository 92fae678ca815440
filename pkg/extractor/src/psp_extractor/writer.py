"""Writer for the scoring engine's bundle interchange format.

Produces the documented on-disk layout the scorer consumes: per-utterance
directories holding ``manifest.json`` plus three little-endian float32
``PSPT`` tensor files, and a corpus-level ``corpus.json``. The binary layout
is: magic ``PSPT``, version u8 (=1), dtype u8 (0 = float32), ndim u8, the
dims as u32 little-endian, then the row-major payload.
"""

from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np

MAGIC = b"PSPT"


def write_tensor(path: Path, array: np.ndarray) -> None:
    a = np.ascontiguousarray(np.asarray(array), dtype="<f4")
    assert a.ndim in (1, 2) and all(d >= 1 for d in a.shape)
    header = MAGIC + struct.pack("<BBB", 1, 0, a.ndim)
    header += struct.pack(f"<{a.ndim}I", *a.shape)
    path.write_bytes(header + a.tobytes(order="C"))


def write_bundle_dir(
    directory: Path,
    *,
    uid: str,
    language: str,
    text: str,
    frame_hop_ms: float,
    duration_s: float,
    speaker_id: str | None,
    vocab: list[str],
    blank_index: int,
    emissions: np.ndarray,
    embeddings: np.ndarray,
    f0_hz: np.ndarray,
    f0_method: str,
    extras: dict | None = None,
) -> Path:
    directory.mkdir(parents=True, exist_ok=True)
    write_tensor(directory / "emissions.pspt", emissions)
    write_tensor(directory / "embeddings.pspt", embeddings)
    write_tensor(directory / "f0.pspt", f0_hz)
    manifest = {
        "schema": "psp_bundle_v1",
        "id": uid,
        "language": language,
        "text": text,
        "frame_hop_ms": frame_hop_ms,
        "duration_s": duration_s,
        "speaker_id": speaker_id,
        "blank_index": blank_index,
        "vocab": vocab,
        "f0_method": f0_method,
        "files": {
            "emissions": "emissions.pspt",
            "embeddings": "embeddings.pspt",
            "f0": "f0.pspt",
        },
    }
    if extras:
        manifest.update(extras)
    (directory / "manifest.json").write_text(
        json.dumps(manifest, ensure_ascii=False, indent=2), encoding="utf-8"
    )
    return directory


def write_corpus_manifest(
    directory: Path,
    corpus_id: str,
    language: str,
    utterances: list[dict],
    system: str | None = None,
) -> Path:
    directory.mkdir(parents=True, exist_ok=True)
    doc = {
        "schema": "psp_corpus_v1",
        "corpus_id": corpus_id,
        "language": language,
        "system": system,
        "utterances": utterances,
    }
    path = directory / "corpus.json"
    path.write_text(json.dumps(doc, ensure_ascii=False, indent=2), encoding="utf-8")
    return path
