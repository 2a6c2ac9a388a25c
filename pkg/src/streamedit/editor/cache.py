"""Rolling key/value cache for chunk-by-chunk generation."""
from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class CacheEntry:
    """Keys and values of one chunk: one ``(k, v)`` pair per block, each ``[B, heads, tokens, d]``."""

    chunk_index: int
    keys: tuple
    values: tuple


class KVCache:
    """Immutable store of the most recent ``window_chunks - 1`` chunks.

    :meth:`appended` returns a new cache; existing entries are shared, never
    modified, and their arrays are marked read-only.
    """

    def __init__(self, n_layers, window_chunks, entries=()):
        if window_chunks < 1:
            raise ValueError("window_chunks must be at least 1")
        self.n_layers = n_layers
        self.window_chunks = window_chunks
        self._entries = tuple(entries)
        if len(self._entries) > self.capacity:
            raise ValueError("too many cached chunks for the window")

    @property
    def capacity(self):
        return self.window_chunks - 1

    @property
    def entries(self):
        return self._entries

    def __len__(self):
        return len(self._entries)

    @property
    def chunk_indices(self):
        return [e.chunk_index for e in self._entries]

    @property
    def next_index(self):
        return self._entries[-1].chunk_index + 1 if self._entries else 0

    def view(self, exclude=()):
        return [e for e in self._entries if e.chunk_index not in exclude]

    def appended(self, entry):
        if len(entry.keys) != self.n_layers or len(entry.values) != self.n_layers:
            raise ValueError(f"entry has {len(entry.keys)} layers, cache expects {self.n_layers}")
        if self._entries and entry.chunk_index <= self._entries[-1].chunk_index:
            raise ValueError("chunks must be appended in increasing order")
        for t in entry.keys + entry.values:
            t.data.flags.writeable = False
        if self.capacity == 0:
            return KVCache(self.n_layers, self.window_chunks)
        kept = (self._entries + (entry,))[-self.capacity:]
        return KVCache(self.n_layers, self.window_chunks, kept)
