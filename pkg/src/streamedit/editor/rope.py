"""Factorized rotary position encoding over (frame, row, column) token coordinates."""
from __future__ import annotations

import numpy as np


def split_head_dim(head_dim):
    """Even-sized sub-bands for frame, row and column; the frame band takes the remainder."""
    spatial = 2 * (head_dim // 6)
    return head_dim - 2 * spatial, spatial, spatial


def _angles(pos, size, base):
    if size == 0:
        return np.zeros((len(pos), 0))
    inv = base ** (-np.arange(0, size, 2) / size)
    return np.repeat(np.outer(pos, inv), 2, axis=1)


def token_coords(frames, hp, wp, frame_offset=0):
    f, h, w = np.meshgrid(np.arange(frames) + frame_offset, np.arange(hp), np.arange(wp), indexing="ij")
    return np.stack([f.ravel(), h.ravel(), w.ravel()], axis=1)


def rope_tables(coords, head_dim, base=10000.0):
    """``cos`` and ``sin`` tables of shape ``[tokens, head_dim]``."""
    sizes = split_head_dim(head_dim)
    ang = np.concatenate([_angles(coords[:, a].astype(np.float64), s, base) for a, s in enumerate(sizes)], axis=1)
    return np.cos(ang), np.sin(ang)


def rotation_matrix(head_dim):
    """``P`` such that ``x @ P`` maps each pair ``(a, b)`` to ``(-b, a)``."""
    P = np.zeros((head_dim, head_dim))
    for i in range(0, head_dim, 2):
        P[i + 1, i] = -1.0
        P[i, i + 1] = 1.0
    return P
