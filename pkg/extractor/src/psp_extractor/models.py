"""Model wrappers: CTC aligner emissions and encoder frame embeddings."""

from __future__ import annotations

import logging

import numpy as np
import torch

from .errors import ModelLoadFailure

log = logging.getLogger(__name__)

SAMPLE_RATE = 16000


def _hop_ms(config) -> float:
    stride = 1
    for s in config.conv_stride:
        stride *= s
    return stride / SAMPLE_RATE * 1000.0


class AlignerModel:
    """CTC acoustic model: waveform -> log-prob emission matrix."""

    def __init__(self, model_id: str, device: str = "cpu"):
        from transformers import Wav2Vec2CTCTokenizer, Wav2Vec2ForCTC

        try:
            self.model = Wav2Vec2ForCTC.from_pretrained(model_id).to(device).eval()
            tokenizer = Wav2Vec2CTCTokenizer.from_pretrained(model_id)
        except Exception as e:
            raise ModelLoadFailure(f"aligner {model_id!r}: {e}") from e
        self.device = device
        self.model_id = model_id
        vocab_map = tokenizer.get_vocab()
        width = int(self.model.config.vocab_size)
        extra = [tok for tok, idx in vocab_map.items() if idx >= width]
        if extra:
            # tokenizer specials past the logit width carry no emission column
            log.warning("%s: dropping %d tokens beyond logit width", model_id, len(extra))
        self.vocab = [
            tok for tok, _ in sorted(
                ((t, i) for t, i in vocab_map.items() if i < width),
                key=lambda kv: kv[1],
            )
        ]
        self.blank_index = int(self.model.config.pad_token_id or 0)
        self.hop_ms = _hop_ms(self.model.config)

    @torch.no_grad()
    def emissions(self, wave: np.ndarray, normalize: bool = True) -> np.ndarray:
        x = _prepare(wave, normalize, self.device)
        logits = self.model(x).logits[0]
        return torch.log_softmax(logits.double(), dim=-1).cpu().numpy()


class EncoderModel:
    """Self-supervised speech encoder: waveform -> one hidden layer's frames."""

    def __init__(self, model_id: str, layer: int = 9, device: str = "cpu"):
        from transformers import Wav2Vec2Model

        try:
            self.model = Wav2Vec2Model.from_pretrained(model_id).to(device).eval()
        except Exception as e:
            raise ModelLoadFailure(f"encoder {model_id!r}: {e}") from e
        if self.model.config.num_hidden_layers < layer:
            raise ModelLoadFailure(
                f"encoder {model_id!r} has {self.model.config.num_hidden_layers} "
                f"layers, need >= {layer}"
            )
        self.device = device
        self.model_id = model_id
        self.layer = layer
        self.hop_ms = _hop_ms(self.model.config)

    @torch.no_grad()
    def embeddings(self, wave: np.ndarray, normalize: bool = True) -> np.ndarray:
        x = _prepare(wave, normalize, self.device)
        out = self.model(x, output_hidden_states=True)
        return out.hidden_states[self.layer][0].cpu().numpy().astype(np.float32)


def _prepare(wave: np.ndarray, normalize: bool, device: str) -> torch.Tensor:
    x = np.asarray(wave, dtype=np.float32)
    if normalize:
        std = x.std()
        x = (x - x.mean()) / (std if std > 1e-7 else 1.0)
    return torch.from_numpy(x).unsqueeze(0).to(device)


def resample_to_grid(
    frames: np.ndarray, src_hop_ms: float, dst_hop_ms: float, n_dst: int
) -> np.ndarray:
    """Nearest-frame duplication of `frames` onto a destination frame grid.

    Exact midpoints round up (toward the later source frame) so the mapping
    is monotone and reproducible across platforms.
    """
    n_src = frames.shape[0]
    idx = np.floor(np.arange(n_dst) * (dst_hop_ms / src_hop_ms) + 0.5).astype(np.int64)
    return frames[np.clip(idx, 0, n_src - 1)]
