"""Bundle extractor: audio to CTC emissions, frame embeddings, and F0."""

from .config import ExtractorConfig
from .extract import Extractor, extract_corpus

__version__ = "0.1.0"
__all__ = ["Extractor", "ExtractorConfig", "extract_corpus"]
