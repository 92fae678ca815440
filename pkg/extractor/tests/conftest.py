import json
from pathlib import Path

import numpy as np
import pytest
import torch
from scipy.io import wavfile

from psp_extractor.config import ExtractorConfig

SR = 16000

# Telugu graphemes the test texts draw from; the tiny aligner's vocab must
# cover them so forced alignment downstream has real targets.
GRAPHEMES = list("టతడదణనషసళలకగమర") + ["ా", "ీ", "ి", "ూ", "ు", "ే", "ె"]

# composed from the vocab graphemes above (whitespace is stripped by the
# scorer's target normalization)
TEXTS = [
    "తల మీద",
    "నది దాటి",
    "టమట నడక",
    "దారి మలుగు",
    "గది తలుగు",
    "సరదా కడలి",
    "నీటి మడుగు",
    "కారు గేదె",
    "మేక తాకి",
    "నలుగురు",
]


def _build_vocab() -> dict[str, int]:
    # mirrors the shape of published CTC vocabs: specials first, then graphemes
    vocab = {"<pad>": 0, "<s>": 1, "</s>": 2, "<unk>": 3, "|": 4}
    for g in GRAPHEMES:
        vocab[g] = len(vocab)
    return vocab


def _save_tokenizer(vocab: dict[str, int], out_dir: Path) -> None:
    from transformers import Wav2Vec2CTCTokenizer

    vocab_file = out_dir / "vocab.json"
    vocab_file.write_text(json.dumps(vocab, ensure_ascii=False), encoding="utf-8")
    tok = Wav2Vec2CTCTokenizer(
        str(vocab_file), pad_token="<pad>", unk_token="<unk>", word_delimiter_token="|"
    )
    tok.save_pretrained(str(out_dir))


@pytest.fixture
def rng():
    return np.random.default_rng(2468)


@pytest.fixture(scope="session")
def model_dirs(tmp_path_factory):
    """Tiny randomly initialized aligner + encoder saved as local model dirs."""
    from transformers import Wav2Vec2Config, Wav2Vec2ForCTC, Wav2Vec2Model

    root = tmp_path_factory.mktemp("models")
    vocab = _build_vocab()

    torch.manual_seed(1234)
    aligner_dir = root / "aligner"
    cfg = Wav2Vec2Config(
        vocab_size=len(vocab),
        hidden_size=32,
        num_hidden_layers=10,
        num_attention_heads=2,
        intermediate_size=64,
        conv_dim=(32,) * 7,
        num_conv_pos_embedding_groups=8,
        pad_token_id=0,
    )
    Wav2Vec2ForCTC(cfg).save_pretrained(str(aligner_dir))
    _save_tokenizer(vocab, aligner_dir)

    encoder_dir = root / "encoder"
    enc_cfg = Wav2Vec2Config(
        vocab_size=len(vocab),
        hidden_size=32,
        num_hidden_layers=10,
        num_attention_heads=2,
        intermediate_size=64,
        conv_dim=(32,) * 7,
        num_conv_pos_embedding_groups=8,
    )
    Wav2Vec2Model(enc_cfg).save_pretrained(str(encoder_dir))
    return {"aligner": aligner_dir, "encoder": encoder_dir}


@pytest.fixture(scope="session")
def config(model_dirs):
    return ExtractorConfig(
        language="te",
        aligner_model_id=str(model_dirs["aligner"]),
        encoder_model_id=str(model_dirs["encoder"]),
    )


def harmonic_clip(rng, f0=140.0, dur=2.0, sr=SR) -> np.ndarray:
    """Speech-like synthetic clip: harmonics with vibrato and syllabic envelope."""
    t = np.arange(int(dur * sr)) / sr
    f0_track = f0 * (1.0 + 0.04 * np.sin(2 * np.pi * 0.8 * t))
    phase = 2 * np.pi * np.cumsum(f0_track) / sr
    x = np.zeros_like(t)
    for k, amp in ((1, 1.0), (2, 0.5), (3, 0.3), (4, 0.15)):
        x += amp * np.sin(k * phase)
    envelope = 0.55 + 0.45 * np.sin(2 * np.pi * 2.5 * t + rng.uniform(0, 2 * np.pi))
    x = x * envelope
    x += 0.004 * rng.normal(size=x.shape)
    return (0.3 * x / np.max(np.abs(x))).astype(np.float32)


def noise_clip(rng, dur=2.0, sr=SR) -> np.ndarray:
    return (0.1 * rng.normal(size=int(dur * sr))).astype(np.float32)


def silence_clip(dur=1.0, sr=SR) -> np.ndarray:
    return np.zeros(int(dur * sr), dtype=np.float32)


def write_wav(path: Path, wave: np.ndarray, sr=SR) -> Path:
    wavfile.write(str(path), sr, (wave * 32767).astype(np.int16))
    return path


def write_manifest(path: Path, rows: list[dict]) -> Path:
    path.write_text(json.dumps(rows, ensure_ascii=False, indent=2), encoding="utf-8")
    return path
