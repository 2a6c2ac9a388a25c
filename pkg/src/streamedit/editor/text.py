"""Deterministic hash-based text token embedder (stand-in for a pretrained text encoder)."""
from __future__ import annotations

import functools
import hashlib
import re

import numpy as np

_WORD = re.compile(r"[a-z0-9]+")


def tokenize(text):
    return _WORD.findall(text.lower())


@functools.lru_cache(maxsize=4096)
def _word_vector(word, dim):
    seed = int.from_bytes(hashlib.blake2b(word.encode(), digest_size=8).digest(), "little")
    v = np.random.default_rng(seed).standard_normal(dim)
    return v / np.linalg.norm(v)


class HashTextEmbedder:
    """Maps an instruction to ``[max_tokens, dim]`` unit vectors plus a validity mask.

    Position 0 is a fixed BOS vector, so an empty instruction (the null
    condition used for guidance) still has one valid token.
    """

    def __init__(self, dim, max_tokens=8):
        if max_tokens < 1:
            raise ValueError("max_tokens must be at least 1")
        self.dim = dim
        self.max_tokens = max_tokens
        self._bos = _word_vector("<bos>", dim)

    def embed(self, texts, dtype=np.float32):
        if isinstance(texts, str):
            texts = [texts]
        B, L = len(texts), self.max_tokens
        tokens = np.zeros((B, L, self.dim))
        valid = np.zeros((B, L), dtype=bool)
        for b, text in enumerate(texts):
            words = tokenize(text or "")[: L - 1]
            tokens[b, 0] = self._bos
            for i, w in enumerate(words, start=1):
                tokens[b, i] = _word_vector(w, self.dim)
            valid[b, : len(words) + 1] = True
        return tokens.astype(dtype), valid
