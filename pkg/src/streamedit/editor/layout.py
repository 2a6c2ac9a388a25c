"""Token layout: patch rearrangement, source conditioning and attention cost."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..autodiff import Tensor
from ..autodiff import functional as F


def _shape(x):
    return x.shape if isinstance(x, Tensor) else np.shape(x)


def patchify_rearrange(latent, patch):
    """``[..., T, C, H, W] -> [..., T, (H/p)(W/p), C p p]`` with tokens in row-major (h, w) order.

    Accepts arrays or Tensors. The rearrangement is a pure permutation.
    """
    shape = _shape(latent)
    if len(shape) < 4:
        raise ValueError(f"expected [..., T, C, H, W], got shape {shape}")
    *lead, T, C, H, W = shape
    p = patch
    if H % p or W % p:
        raise ValueError(f"patch {p} does not divide spatial size {H}x{W}")
    nl = len(lead)
    x = latent.reshape(*lead, T, C, H // p, p, W // p, p)
    perm = tuple(range(nl)) + tuple(nl + a for a in (0, 2, 4, 1, 3, 5))
    x = x.transpose(perm)
    return x.reshape(*lead, T, (H // p) * (W // p), C * p * p)


def unpatchify(tokens, patch, channels, height, width):
    """Inverse of :func:`patchify_rearrange`."""
    shape = _shape(tokens)
    *lead, T, N, D = shape
    p = patch
    hp, wp = height // p, width // p
    if N != hp * wp or D != channels * p * p:
        raise ValueError(f"token block {shape[-2:]} does not match {channels}x{height}x{width} with patch {p}")
    nl = len(lead)
    x = tokens.reshape(*lead, T, hp, wp, channels, p, p)
    perm = tuple(range(nl)) + tuple(nl + a for a in (0, 3, 1, 4, 2, 5))
    x = x.transpose(perm)
    return x.reshape(*lead, T, channels, height, width)


def patchify(latent, patch):
    """Flat token matrix ``[T (H/p)(W/p), C p^2]`` for a single ``[T, C, H, W]`` latent."""
    tok = patchify_rearrange(latent, patch)
    T, N, D = _shape(tok)[-3:]
    return tok.reshape(T * N, D)


def token_count(frames, height, width, patch):
    if height % patch or width % patch:
        raise ValueError(f"patch {patch} does not divide {height}x{width}")
    return frames * (height // patch) * (width // patch)


def _check_pair(src, tgt):
    if _shape(src) != _shape(tgt):
        raise ValueError(f"source shape {_shape(src)} differs from target shape {_shape(tgt)}")


def channel_concat(src, tgt_noisy):
    """Stack source and noisy target on the channel axis (axis -3 of ``[..., T, C, H, W]``)."""
    _check_pair(src, tgt_noisy)
    if isinstance(src, Tensor) or isinstance(tgt_noisy, Tensor):
        return F.concat([src if isinstance(src, Tensor) else Tensor(src),
                         tgt_noisy if isinstance(tgt_noisy, Tensor) else Tensor(tgt_noisy)], axis=-3)
    return np.concatenate([src, tgt_noisy], axis=-3)


def sequence_concat(src, tgt_noisy, patch):
    """Reference variant: patch both streams and join them along the token axis."""
    _check_pair(src, tgt_noisy)
    a, b = patchify(src, patch), patchify(tgt_noisy, patch)
    if isinstance(a, Tensor) or isinstance(b, Tensor):
        return F.concat([Tensor(a) if not isinstance(a, Tensor) else a,
                         Tensor(b) if not isinstance(b, Tensor) else b], axis=0)
    return np.concatenate([a, b], axis=0)


@dataclass(frozen=True)
class AttentionCost:
    """Multiply-accumulate counts of one self-attention layer."""

    scores: int
    values: int
    projections: int

    @property
    def quadratic(self):
        return self.scores + self.values

    @property
    def total(self):
        return self.quadratic + self.projections


def attention_cost(seq_len, hidden, heads=1):
    """MACs for QK^T and AV (``seq_len^2 * hidden`` each) plus the four linear maps.

    The head count splits ``hidden`` but leaves the totals unchanged.
    """
    if seq_len < 1 or hidden < 1 or heads < 1:
        raise ValueError("attention_cost needs positive arguments")
    if hidden % heads:
        raise ValueError(f"hidden={hidden} is not divisible by heads={heads}")
    quad = seq_len * seq_len * hidden
    return AttentionCost(scores=quad, values=quad, projections=4 * seq_len * hidden * hidden)
