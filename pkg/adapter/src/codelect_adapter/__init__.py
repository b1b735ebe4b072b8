"""Wire-protocol embedding server backed by a saved transformer checkpoint."""

from .embedder import POOLING_MODES, AdapterConfig, CheckpointEmbedder, EmbedResult
from .serve import serve

__version__ = "0.1.0"

__all__ = [
    "AdapterConfig",
    "CheckpointEmbedder",
    "EmbedResult",
    "POOLING_MODES",
    "serve",
]
