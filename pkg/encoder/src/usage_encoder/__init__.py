"""Embedding tables for the sense-detection pipeline, from a transformer encoder."""

__version__ = "0.1.0"

from .adapter import EncoderConfig, Layer, UsageEncoder, embed_dataset, embed_tokens
from .dataset import read_dataset
from .emb1 import write_emb1

__all__ = [
    "__version__",
    "EncoderConfig",
    "Layer",
    "UsageEncoder",
    "embed_dataset",
    "embed_tokens",
    "read_dataset",
    "write_emb1",
]
