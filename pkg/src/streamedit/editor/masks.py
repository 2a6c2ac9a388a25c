"""Chunk-level attention masks for bidirectional and chunk-causal modes."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class AttentionMask:
    """Block mask: ``chunk_allowed[i, j]`` says whether chunk ``i`` may attend to chunk ``j``.

    Attention inside an allowed block is full.
    """

    chunk_allowed: np.ndarray
    tokens_per_chunk: int
    mask_first_chunk_for_last: bool = False

    @property
    def n_chunks(self):
        return self.chunk_allowed.shape[0]

    @property
    def n_tokens(self):
        return self.n_chunks * self.tokens_per_chunk

    def token_mask(self):
        """Dense ``[tokens, tokens]`` boolean matrix."""
        block = np.ones((self.tokens_per_chunk, self.tokens_per_chunk), dtype=bool)
        return np.kron(self.chunk_allowed, block).astype(bool)

    def visible_chunks(self, i):
        return [int(j) for j in np.flatnonzero(self.chunk_allowed[i])]

    def is_block_lower_triangular(self):
        return not np.any(np.triu(self.chunk_allowed, k=1))


def build_chunk_causal_mask(n_chunks, tokens_per_chunk, window=None, mask_first_for_last=False):
    """Chunk ``i`` sees chunks ``max(0, i - window + 1) .. i``; ``window=None`` means unbounded."""
    if n_chunks < 1:
        raise ValueError("n_chunks must be at least 1")
    if tokens_per_chunk < 1:
        raise ValueError("tokens_per_chunk must be at least 1")
    if window is not None and window < 1:
        raise ValueError("window must be at least 1")
    i = np.arange(n_chunks)[:, None]
    j = np.arange(n_chunks)[None, :]
    allowed = j <= i
    if window is not None:
        allowed &= j >= i - window + 1
    if mask_first_for_last and n_chunks > 1:
        allowed[n_chunks - 1, 0] = False
    return AttentionMask(allowed, tokens_per_chunk, mask_first_for_last)


def full_mask(n_chunks, tokens_per_chunk):
    return AttentionMask(np.ones((n_chunks, n_chunks), dtype=bool), tokens_per_chunk)
