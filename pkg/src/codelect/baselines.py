"""Deterministic hashed-count embedders: a bag-of-tokens baseline that
is a pure function of the token multiset, and an order-sensitive
bigram-hash contrast.

Both lex with the generic lexer so that any candidate text embeds,
valid code or not. Buckets come from the project's fixed 64-bit hash,
never the interpreter's salted `hash()`, so vectors are byte-stable
across platforms and runs.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import ZeroVector
from .lexing import lex_generic
from .seeds import hash64_str


@dataclass(frozen=True)
class HashedEmbedderConfig:
    dims: int = 4096
    seed: int = 0
    ngram: str = "unigram"

    def __post_init__(self):
        if self.dims < 64:
            raise ValueError("dims must be >= 64")
        if self.ngram not in ("unigram", "bigram"):
            raise ValueError(f"unknown ngram kind {self.ngram!r}")

    @property
    def embedder_id(self) -> str:
        tag = "bag" if self.ngram == "unigram" else "bigram"
        return f"{tag}-d{self.dims}-s{self.seed}"


@lru_cache(maxsize=1 << 16)
def _bucket(key: str, seed: int, dims: int) -> int:
    return hash64_str(key, seed) % dims


def bag_of_tokens_embed(code: str, cfg: HashedEmbedderConfig) -> np.ndarray:
    """Hashed token counts; invariant under any permutation of tokens."""
    tokens = lex_generic(code)
    if not tokens:
        raise ZeroVector("no tokens to embed")
    vec = np.zeros(cfg.dims, dtype=np.float64)
    for t in tokens:
        vec[_bucket(t.text, cfg.seed, cfg.dims)] += 1.0
    return vec


def bigram_hash_embed(code: str, cfg: HashedEmbedderConfig) -> np.ndarray:
    """Hashed adjacent-pair counts; sensitive to token order."""
    tokens = lex_generic(code)
    if len(tokens) < 2:
        raise ZeroVector("need at least 2 tokens for bigrams")
    vec = np.zeros(cfg.dims, dtype=np.float64)
    for a, b in zip(tokens, tokens[1:]):
        vec[_bucket(a.text + "\x1f" + b.text, cfg.seed, cfg.dims)] += 1.0
    return vec


def embed(code: str, cfg: HashedEmbedderConfig) -> np.ndarray:
    if cfg.ngram == "unigram":
        return bag_of_tokens_embed(code, cfg)
    return bigram_hash_embed(code, cfg)


class BaselineEmbedder:
    """In-process embedder handle with the same surface the protocol
    client exposes: embedder_id, dims, embed(text)."""

    def __init__(self, cfg: HashedEmbedderConfig):
        self.cfg = cfg

    @property
    def embedder_id(self) -> str:
        return self.cfg.embedder_id

    @property
    def dims(self) -> int:
        return self.cfg.dims

    def embed(self, text: str) -> np.ndarray:
        return embed(text, self.cfg)

    def close(self) -> None:
        pass


def make_baseline(kind: str, dims: int = 4096, seed: int = 0) -> BaselineEmbedder:
    ngram = {"bag": "unigram", "bigram": "bigram"}.get(kind)
    if ngram is None:
        raise ValueError(f"unknown baseline kind {kind!r} (want bag|bigram)")
    return BaselineEmbedder(HashedEmbedderConfig(dims=dims, seed=seed, ngram=ngram))
