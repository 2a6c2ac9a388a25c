"""Chunk-by-chunk causal generation, shared by Self-Forcing training and the streaming runtime.

Each chunk is denoised in ``steps`` Euler steps against the rolling KV cache,
then one extra pass over the clean chunk (``t = 1``) writes its keys/values
into the cache. That cache pass is bookkeeping and is not counted as an NFE.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..autodiff import Tensor, no_grad
from ..autodiff import functional as F
from ..flow import SamplerConfig, euler_sample


@dataclass
class ChunkRecord:
    chunk_index: int
    nfe: int
    visible: list = field(default_factory=list)
    excluded: tuple = ()


def chunk_noise(seed, chunk_index, shape, dtype=np.float32):
    """Initial noise of one chunk; independent of how many chunks precede or follow."""
    return np.random.default_rng([int(seed), int(chunk_index)]).standard_normal(shape).astype(dtype)


def excluded_chunks(chunk_index, n_chunks, mask_first_for_last):
    if mask_first_for_last and n_chunks > 1 and chunk_index == n_chunks - 1:
        return (0,)
    return ()


def generate_chunk(model, cache, cond_chunk, noise, chunk_index, steps, exclude=(), grad=False, context=None):
    """Denoise one chunk and return ``(x, cache', record)``.

    ``x`` is a Tensor (differentiable w.r.t. the model) when ``grad`` is set,
    else an array. ``context`` replaces the generated chunk in the cache pass
    (teacher forcing); by default the model's own output is cached.
    """
    calls = [0]

    def velocity(x, t, c):
        calls[0] += 1
        v, _ = model.forward_incremental(x, t, c, cache, chunk_index=chunk_index, exclude=exclude)
        return v

    config = SamplerConfig(steps=steps)
    if grad:
        x = euler_sample(velocity, Tensor(noise), config, cond_chunk)
    else:
        with no_grad():
            x = euler_sample(velocity, noise, config, cond_chunk)
    clean = x.data if isinstance(x, Tensor) else x
    if context is not None:
        clean = np.asarray(context, dtype=clean.dtype)
    with no_grad():
        _, new_cache = model.forward_incremental(
            clean, np.ones(clean.shape[0]), cond_chunk, cache, chunk_index=chunk_index, exclude=exclude
        )
    visible = [i for i in cache.chunk_indices if i not in exclude and i > chunk_index - cache.window_chunks]
    return x, new_cache, ChunkRecord(chunk_index, calls[0], visible, tuple(exclude))


def self_forcing_rollout(model, cond, n_chunks, steps=4, seed=0, noise=None, grad=False,
                         mask_first_for_last=True, context=None):
    """Generate ``n_chunks`` chunks autoregressively, each conditioned on earlier outputs.

    ``noise`` (full ``[B, T, C, H, W]``) overrides the per-chunk seeded noise.
    ``context`` (same shape) switches to teacher forcing: the cache is filled
    with those chunks instead of the model's own outputs.
    Returns ``(video, records)``.
    """
    cl = model.config.chunk_latents
    B = cond.src.shape[0]
    frame_shape = cond.src.shape[2:]
    if cond.src.shape[1] != n_chunks * cl:
        raise ValueError(f"source has {cond.src.shape[1]} latent frames, rollout needs {n_chunks * cl}")
    cache = model.new_cache()
    chunks, records = [], []
    for k in range(n_chunks):
        if noise is None:
            z = chunk_noise(seed, k, (B, cl) + frame_shape, model.dtype)
        else:
            z = np.asarray(noise[:, k * cl:(k + 1) * cl], dtype=model.dtype)
        ctx = None if context is None else context[:, k * cl:(k + 1) * cl]
        exclude = excluded_chunks(k, n_chunks, mask_first_for_last)
        x, cache, rec = generate_chunk(model, cache, cond.chunk(k, cl), z, k, steps, exclude, grad, ctx)
        chunks.append(x)
        records.append(rec)
    if grad:
        return F.concat(chunks, axis=1), records
    return np.concatenate(chunks, axis=1), records


def rollout_generator(n_chunks, steps, mask_first_for_last=True):
    """Adapter for :class:`DMDTrainer`: ``(student, noise, cond) -> (video, nfe per chunk)``."""

    def generate(student, noise, cond):
        video, records = self_forcing_rollout(student, cond, n_chunks, steps, noise=noise, grad=True,
                                              mask_first_for_last=mask_first_for_last)
        nfe = {r.nfe for r in records}
        return video, nfe.pop() if len(nfe) == 1 else max(nfe)

    return generate
