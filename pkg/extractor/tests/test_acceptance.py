"""Acceptance gate for the extractor.

The scoring engine is consumed the way any external producer would use it:
through its CLI and the on-disk bundle format, never through its Python API.
"""

import json
import subprocess
import sys

import numpy as np
import pytest

from conftest import TEXTS, harmonic_clip, noise_clip, write_manifest, write_wav
from psp_extractor.extract import Extractor, extract_corpus


def scorer(*args):
    """Invoke the scoring engine CLI; returns (exit code, stdout)."""
    proc = subprocess.run(
        [sys.executable, "-m", "psp_eval", *map(str, args)],
        capture_output=True,
        text=True,
    )
    return proc.returncode, proc.stdout + proc.stderr


def extract_sample(tmp_path, config, rng, n, out_name, id_prefix, f0_base=120.0):
    rows = []
    for i in range(n):
        wav = write_wav(
            tmp_path / f"{id_prefix}{i}.wav",
            harmonic_clip(rng, f0=f0_base + 12.0 * i, dur=1.8 + 0.2 * (i % 3)),
        )
        rows.append(
            {"id": f"{id_prefix}{i:02d}", "audio": wav.name, "text": TEXTS[i % len(TEXTS)],
             "speaker_id": f"spk-{id_prefix}{i}"}
        )
    manifest = write_manifest(tmp_path / f"{out_name}.json", rows)
    out = tmp_path / out_name
    extract_corpus(manifest, out, config, corpus_id=out_name, system=out_name)
    return out


def test_five_clip_sample_validates(tmp_path, config, rng):
    corpus = extract_sample(tmp_path, config, rng, 5, "sample", "clip")
    code, out = scorer("validate", corpus)
    assert code == 0, out
    assert "5 bundles checked, 0 invalid" in out
    print("PASS  5-clip sample: every bundle passes the scorer's validator")


def test_frame_count_tracks_duration(tmp_path, config, rng):
    corpus = extract_sample(tmp_path, config, rng, 5, "frames", "fr")
    for bundle_dir in sorted(p for p in corpus.iterdir() if p.is_dir()):
        doc = json.loads((bundle_dir / "manifest.json").read_text(encoding="utf-8"))
        from test_extract import read_pspt

        t = read_pspt(bundle_dir / "emissions.pspt").shape[0]
        expected = doc["duration_s"] * 1000.0 / doc["frame_hop_ms"]
        assert abs(t - expected) <= 2, bundle_dir
    print("PASS  frame count within +/-2 of duration/hop on all 5 bundles")


def test_deterministic_re_extraction(tmp_path, config, rng):
    wav = write_wav(tmp_path / "det.wav", harmonic_clip(rng, f0=150.0))
    a = Extractor(config).extract(wav, TEXTS[0], uid="det")
    b = Extractor(config).extract(wav, TEXTS[0], uid="det")
    for key in ("emissions", "embeddings", "f0_hz"):
        diff = float(np.max(np.abs(a[key] - b[key]))) if a[key].size else 0.0
        assert diff <= 1e-5, key
    print("PASS  deterministic re-extraction within 1e-5 max-abs")


def test_end_to_end_smoke(tmp_path, config, rng):
    # 10 native-like clips, split 5/5 into centroid and held-out halves
    cent_half = extract_sample(tmp_path, config, rng, 5, "native-a", "na", f0_base=115.0)
    held_half = extract_sample(tmp_path, config, rng, 5, "native-b", "nb", f0_base=125.0)

    noise_rows = []
    for i in range(5):
        wav = write_wav(tmp_path / f"wn{i}.wav", noise_clip(rng, dur=2.0))
        noise_rows.append(
            {"id": f"wn{i:02d}", "audio": wav.name, "text": TEXTS[i], "speaker_id": f"n{i}"}
        )
    noise_manifest = write_manifest(tmp_path / "noise.json", noise_rows)
    noise_corpus = tmp_path / "noise"
    extract_corpus(noise_manifest, noise_corpus, config, corpus_id="noise", system="noise")

    cent_dir, bank_dir = tmp_path / "cent", tmp_path / "bank"
    code, out = scorer("centroids", cent_half, "-o", cent_dir, "--min-speakers", 2)
    assert code in (0, 2), out
    code, out = scorer("bank", cent_half, "-o", bank_dir)
    assert code == 0, out

    floor_card = tmp_path / "floor.json"
    code, out = scorer(
        "sanity", held_half, "--centroids", cent_dir, "--refs", bank_dir, "-o", floor_card
    )
    assert code in (0, 2), out

    noise_card = tmp_path / "noise.scorecard.json"
    code, out = scorer(
        "score", noise_corpus, "--centroids", cent_dir, "--refs", bank_dir, "-o", noise_card
    )
    assert code in (0, 2), out

    fad_self = json.loads(floor_card.read_text(encoding="utf-8"))["fad"]["total"]
    fad_noise = json.loads(noise_card.read_text(encoding="utf-8"))["fad"]["total"]
    assert fad_self is not None and fad_noise is not None
    assert fad_self < fad_noise
    print(
        f"PASS  end-to-end smoke: FAD(held-out native) {fad_self:.3g} < "
        f"FAD(white noise) {fad_noise:.3g}"
    )
