"""Per-dimension accent scoring for Indic TTS.

Scores synthesized speech against native-speaker references on six
dimensions: retroflex (RR), aspiration (AF), vowel length (LF), Tamil zha
(ZF), embedding-space Fréchet distance (FAD), and prosodic signature
divergence (PSD). Input is the bundle interchange format (CTC emissions,
frame embeddings, F0 track per utterance); see the README for the formats
and the CLI.
"""

from .bootstrap import BootstrapConfig, bootstrap_ci
from .centroids import (
    CentroidSet,
    ReferenceBank,
    build_centroids,
    build_reference_bank,
    sample_corpus,
)
from .ctc_align import AlignmentSpan, force_align, greedy_frames, span_embedding
from .distributional import (
    FrechetResult,
    GaussianSummary,
    fit_gaussian,
    frechet,
    npvi,
    prosodic_vector,
    psd,
)
from .interchange import (
    DimensionTable,
    UtteranceBundle,
    load_dimension_tables,
    read_tensor,
    validate_bundle,
    write_tensor,
)
from .probes import (
    DimensionScore,
    TokenFidelity,
    aggregate,
    fidelity,
    lf_fidelity,
    normalize_floor,
    score_per_phoneme,
)

__version__ = "0.1.0"

__all__ = [
    "AlignmentSpan",
    "BootstrapConfig",
    "CentroidSet",
    "DimensionScore",
    "DimensionTable",
    "FrechetResult",
    "GaussianSummary",
    "ReferenceBank",
    "TokenFidelity",
    "UtteranceBundle",
    "aggregate",
    "bootstrap_ci",
    "build_centroids",
    "build_reference_bank",
    "fidelity",
    "fit_gaussian",
    "force_align",
    "frechet",
    "greedy_frames",
    "lf_fidelity",
    "load_dimension_tables",
    "normalize_floor",
    "npvi",
    "prosodic_vector",
    "psd",
    "read_tensor",
    "sample_corpus",
    "score_per_phoneme",
    "span_embedding",
    "validate_bundle",
    "write_tensor",
]
