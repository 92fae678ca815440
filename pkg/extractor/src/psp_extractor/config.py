"""Extractor configuration."""

from __future__ import annotations

from dataclasses import dataclass


@dataclass
class ExtractorConfig:
    """Model roster and framing for one language's extraction run.

    The encoder layer index is fixed at 9; scoring-side centroids are built
    from that layer and mixing layers would silently break comparability.
    """

    language: str
    aligner_model_id: str
    encoder_model_id: str
    f0_method: str = "autocorr"
    device: str = "cpu"
    frame_hop_ms: float | None = None  # None: take the aligner's hop
    encoder_layer: int = 9
    normalize_input: bool = True  # zero-mean/unit-var waveform normalization
    resample_embeddings: bool = True  # nearest-frame duplication onto the emission grid

    def __post_init__(self):
        if self.language not in ("te", "hi", "ta"):
            raise ValueError(f"unknown language {self.language!r}")
        if self.encoder_layer != 9:
            raise ValueError("encoder layer is pinned to 9 for centroid comparability")
