"""Audio -> bundle extraction pipeline."""

from __future__ import annotations

import csv
import hashlib
import json
import logging
import os
import shutil
import tempfile
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .audio import load_wav
from .config import ExtractorConfig
from .errors import ExtractorError, HopMismatch
from .f0 import track_f0
from .models import SAMPLE_RATE, AlignerModel, EncoderModel, resample_to_grid
from .writer import write_bundle_dir, write_corpus_manifest

log = logging.getLogger(__name__)


@dataclass
class ExtractionResult:
    uid: str
    path: Path
    n_frames: int
    skipped: bool = False


class Extractor:
    """Holds the loaded model pair and turns (audio, text) into bundles."""

    def __init__(self, config: ExtractorConfig):
        self.config = config
        self.aligner = AlignerModel(config.aligner_model_id, device=config.device)
        self.encoder = EncoderModel(
            config.encoder_model_id, layer=config.encoder_layer, device=config.device
        )
        self.hop_ms = config.frame_hop_ms or self.aligner.hop_ms
        if abs(self.hop_ms - self.aligner.hop_ms) > 1e-6:
            raise HopMismatch(
                f"configured hop {self.hop_ms} ms != aligner hop {self.aligner.hop_ms} ms"
            )
        if self.encoder.hop_ms != self.aligner.hop_ms and not config.resample_embeddings:
            raise HopMismatch(
                f"encoder hop {self.encoder.hop_ms} ms != aligner hop "
                f"{self.aligner.hop_ms} ms and resampling is disabled"
            )

    def extract(
        self,
        audio_path: str | Path,
        text: str,
        uid: str | None = None,
        speaker_id: str | None = None,
    ) -> dict:
        """Run both models plus the pitch tracker over one clip.

        Returns the bundle fields as a dict (see write_bundle for the disk
        form); emission and embedding matrices share the emission frame grid.
        """
        wave = load_wav(audio_path, target_rate=SAMPLE_RATE)
        emissions = self.aligner.emissions(wave, normalize=self.config.normalize_input)
        embeddings = self.encoder.embeddings(wave, normalize=self.config.normalize_input)
        n_frames = emissions.shape[0]
        if embeddings.shape[0] != n_frames or self.encoder.hop_ms != self.aligner.hop_ms:
            embeddings = resample_to_grid(
                embeddings, self.encoder.hop_ms, self.aligner.hop_ms, n_frames
            )
        f0 = track_f0(wave, SAMPLE_RATE, self.hop_ms, n_frames)
        return {
            "uid": uid or Path(audio_path).stem,
            "language": self.config.language,
            "text": text,
            "frame_hop_ms": float(self.hop_ms),
            "duration_s": len(wave) / SAMPLE_RATE,
            "speaker_id": speaker_id,
            "vocab": self.aligner.vocab,
            "blank_index": self.aligner.blank_index,
            "emissions": emissions.astype(np.float32),
            "embeddings": embeddings.astype(np.float32),
            "f0_hz": f0,
            "f0_method": self.config.f0_method,
        }

    def write_bundle(self, bundle: dict, directory: Path, extras: dict | None = None) -> Path:
        """Atomic write: a temp directory is renamed into place when complete."""
        directory = Path(directory)
        tmp = Path(
            tempfile.mkdtemp(prefix=f".{directory.name}-", dir=directory.parent)
        )
        try:
            write_bundle_dir(
                tmp,
                uid=bundle["uid"],
                language=bundle["language"],
                text=bundle["text"],
                frame_hop_ms=bundle["frame_hop_ms"],
                duration_s=bundle["duration_s"],
                speaker_id=bundle["speaker_id"],
                vocab=bundle["vocab"],
                blank_index=bundle["blank_index"],
                emissions=bundle["emissions"],
                embeddings=bundle["embeddings"],
                f0_hz=bundle["f0_hz"],
                f0_method=bundle["f0_method"],
                extras=extras,
            )
            if directory.exists():
                shutil.rmtree(directory)
            os.rename(tmp, directory)
        except Exception:
            shutil.rmtree(tmp, ignore_errors=True)
            raise
        return directory


def _file_sha256(path: Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def _existing_is_current(bundle_dir: Path, source_hash: str) -> bool:
    manifest = bundle_dir / "manifest.json"
    if not manifest.exists():
        return False
    try:
        doc = json.loads(manifest.read_text(encoding="utf-8"))
    except json.JSONDecodeError:
        return False
    if doc.get("source_sha256") != source_hash:
        return False
    return all(
        (bundle_dir / doc["files"][k]).exists() for k in ("emissions", "embeddings", "f0")
    )


def read_manifest_rows(path: Path) -> list[dict]:
    """Corpus source manifest: CSV or JSON rows of (id, audio, text, speaker_id)."""
    if path.suffix.lower() == ".json":
        rows = json.loads(path.read_text(encoding="utf-8"))
    else:
        with open(path, newline="", encoding="utf-8") as f:
            rows = list(csv.DictReader(f))
    for row in rows:
        if not {"id", "audio", "text"} <= set(row):
            raise ExtractorError(f"{path}: rows need id, audio, text columns")
    return rows


def extract_corpus(
    manifest_path: str | Path,
    out_dir: str | Path,
    config: ExtractorConfig,
    corpus_id: str | None = None,
    system: str | None = None,
) -> list[ExtractionResult]:
    """Extract every manifest row into a corpus directory.

    Idempotent: rows whose bundle already exists with a matching source-audio
    hash are skipped. Per-row failures are logged and excluded from the
    corpus manifest rather than aborting the run.
    """
    manifest_path = Path(manifest_path)
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    rows = read_manifest_rows(manifest_path)
    if not rows:
        log.warning("%s: empty manifest", manifest_path)
    extractor = Extractor(config)

    results: list[ExtractionResult] = []
    entries: list[dict] = []
    for row in rows:
        uid = row["id"]
        audio = Path(row["audio"])
        if not audio.is_absolute():
            audio = manifest_path.parent / audio
        bundle_dir = out_dir / uid
        try:
            source_hash = _file_sha256(audio)
            if _existing_is_current(bundle_dir, source_hash):
                log.info("%s: up to date, skipped", uid)
                results.append(ExtractionResult(uid, bundle_dir, -1, skipped=True))
            else:
                bundle = extractor.extract(
                    audio, row["text"], uid=uid, speaker_id=row.get("speaker_id")
                )
                extractor.write_bundle(
                    bundle, bundle_dir, extras={"source_sha256": source_hash}
                )
                results.append(
                    ExtractionResult(uid, bundle_dir, bundle["emissions"].shape[0])
                )
            entries.append(
                {"id": uid, "path": uid, "speaker_id": row.get("speaker_id")}
            )
        except (ExtractorError, OSError) as e:
            log.error("%s: extraction failed (%s)", uid, e)
    write_corpus_manifest(
        out_dir,
        corpus_id=corpus_id or manifest_path.stem,
        language=config.language,
        utterances=entries,
        system=system,
    )
    done = sum(1 for r in results if not r.skipped)
    skipped = sum(1 for r in results if r.skipped)
    log.info(
        "%d extracted, %d skipped, %d failed",
        done, skipped, len(rows) - done - skipped,
    )
    return results
