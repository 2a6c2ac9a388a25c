"""Diffusion-transformer editor with channel-wise source conditioning.

Latent videos are ``[B, T, C, H, W]``. Inside the network hidden states are
kept as ``[B, T, tokens_per_frame, hidden]`` so that per-frame timestep
modulation broadcasts without copies.
"""
from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from ..autodiff import Linear, Module, Tensor, mac_scope
from ..autodiff import functional as F
from .cache import CacheEntry, KVCache
from .config import ModelConfig
from .layout import channel_concat, patchify_rearrange, unpatchify
from .masks import AttentionMask
from .rope import rope_tables, rotation_matrix, token_coords
from .text import HashTextEmbedder


@dataclass(frozen=True)
class EditCondition:
    """Everything the editor conditions on besides the noisy target and time."""

    src: np.ndarray  # [B, T, C, H, W]
    text: np.ndarray  # [B, L, text_dim]
    text_mask: np.ndarray  # [B, L] bool, True where a token is present

    @property
    def batch(self):
        return self.src.shape[0]

    def frames(self, start, stop):
        return replace(self, src=self.src[:, start:stop])

    def chunk(self, k, chunk_latents):
        return self.frames(k * chunk_latents, (k + 1) * chunk_latents)

    def take(self, index):
        return EditCondition(self.src[index], self.text[index], self.text_mask[index])


def timestep_features(t, dim):
    """Sinusoidal features of ``1000 t``; output shape ``t.shape + (dim,)``."""
    half = dim // 2
    freqs = np.exp(-np.log(10000.0) * np.arange(half) / half)
    args = np.asarray(t, dtype=np.float64)[..., None] * 1000.0 * freqs
    return np.concatenate([np.cos(args), np.sin(args)], axis=-1)


class TimestepEmbedding(Module):
    def __init__(self, freq_dim, hidden, rng):
        self.freq_dim = freq_dim
        self.fc1 = Linear(freq_dim, hidden, rng)
        self.fc2 = Linear(hidden, hidden, rng)

    def forward(self, t, dtype):
        h = self.fc1(Tensor(timestep_features(t, self.freq_dim).astype(dtype)))
        return self.fc2(F.silu(h))


def _split_heads(x, heads):
    B, N, D = x.shape
    return x.reshape(B, N, heads, D // heads).transpose(0, 2, 1, 3)


def _merge_heads(x):
    B, h, N, d = x.shape
    return x.transpose(0, 2, 1, 3).reshape(B, N, h * d)


def attend(q, k, v, allowed=None, scope="attn"):
    """Scaled dot-product attention over unit-normalised queries and keys.

    ``allowed`` is a boolean array broadcastable to ``[..., Nq, Nk]``; masked
    logits become ``-inf`` so masked keys get exactly zero weight. The two
    matmuls are tallied under ``<scope>_scores`` and ``<scope>_values``.
    """
    d = q.shape[-1]
    with mac_scope(f"{scope}_scores"):
        logits = F.matmul(q, k.swapaxes(-1, -2))
    logits = logits * float(np.sqrt(d))
    if allowed is not None:
        logits = F.masked_fill(logits, ~allowed, -np.inf)
    weights = F.softmax(logits, axis=-1)
    with mac_scope(f"{scope}_values"):
        return F.matmul(weights, v)


class SelfAttention(Module):
    def __init__(self, hidden, heads, rng):
        self.heads = heads
        self.q = Linear(hidden, hidden, rng)
        self.k = Linear(hidden, hidden, rng)
        self.v = Linear(hidden, hidden, rng)
        self.o = Linear(hidden, hidden, rng)

    def project(self, x, rope):
        cos, sin, P = rope
        q = F.qk_norm(_split_heads(self.q(x), self.heads))
        k = F.qk_norm(_split_heads(self.k(x), self.heads))
        v = _split_heads(self.v(x), self.heads)
        q = q * cos + F.matmul(q, P) * sin
        k = k * cos + F.matmul(k, P) * sin
        return q, k, v

    def forward(self, x, rope, allowed=None, past=()):
        q, k, v = self.project(x, rope)
        if past:
            keys = F.concat([pk for pk, _ in past] + [k], axis=2)
            vals = F.concat([pv for _, pv in past] + [v], axis=2)
        else:
            keys, vals = k, v
        out = self.o(_merge_heads(attend(q, keys, vals, allowed)))
        return out, (k, v)


class CrossAttention(Module):
    def __init__(self, hidden, heads, rng):
        self.heads = heads
        self.q = Linear(hidden, hidden, rng)
        self.k = Linear(hidden, hidden, rng)
        self.v = Linear(hidden, hidden, rng)
        self.o = Linear(hidden, hidden, rng)

    def forward(self, x, context, context_valid):
        q = F.qk_norm(_split_heads(self.q(x), self.heads))
        k = F.qk_norm(_split_heads(self.k(context), self.heads))
        v = _split_heads(self.v(context), self.heads)
        allowed = context_valid[:, None, None, :]
        return self.o(_merge_heads(attend(q, k, v, allowed, scope="cross")))


def _modulate(x, shift, scale):
    return F.rmsnorm(x) * (scale + 1.0) + shift


class EditorBlock(Module):
    """Self-attention, text cross-attention and MLP, each gated by timestep modulation."""

    def __init__(self, cfg, rng):
        D = cfg.hidden
        self.attn = SelfAttention(D, cfg.heads, rng)
        self.cross = CrossAttention(D, cfg.heads, rng)
        self.fc1 = Linear(D, cfg.mlp_ratio * D, rng)
        self.fc2 = Linear(cfg.mlp_ratio * D, D, rng)
        self.mod = Linear(D, 9 * D, rng)

    def forward(self, x, temb, rope, context, context_valid, allowed=None, past=()):
        B, T, n, D = x.shape
        mods = F.split(self.mod(F.silu(temb)), 9, axis=-1)

        h = _modulate(x, mods[0], mods[1]).reshape(B, T * n, D)
        out, kv = self.attn(h, rope, allowed, past)
        x = x + out.reshape(B, T, n, D) * mods[2]

        h = _modulate(x, mods[3], mods[4]).reshape(B, T * n, D)
        out = self.cross(h, context, context_valid)
        x = x + out.reshape(B, T, n, D) * mods[5]

        h = _modulate(x, mods[6], mods[7])
        out = self.fc2(F.gelu(self.fc1(h)))
        return x + out * mods[8], kv


class EditorTransformer(Module):
    """Velocity predictor ``v(x_t, t, condition)`` for instruction-guided video editing.

    ``forward`` processes a whole clip (bidirectional, or chunk-causal when
    given a mask); ``forward_incremental`` processes one chunk against a
    :class:`KVCache` of earlier chunks.
    """

    def __init__(self, config=None, rng=None, seed=0):
        cfg = config or ModelConfig()
        rng = rng if rng is not None else np.random.default_rng(seed)
        self.config = cfg
        p2 = cfg.patch * cfg.patch
        self.embed = Linear(cfg.in_channels * p2, cfg.hidden, rng)
        self.text_proj = Linear(cfg.text_dim, cfg.hidden, rng)
        self.time = TimestepEmbedding(cfg.freq_dim, cfg.hidden, rng)
        self.blocks = [EditorBlock(cfg, rng) for _ in range(cfg.blocks)]
        self.final_mod = Linear(cfg.hidden, 2 * cfg.hidden, rng)
        self.head = Linear(cfg.hidden, cfg.latent_channels * p2, rng)
        self.text_embedder = HashTextEmbedder(cfg.text_dim, cfg.max_text_tokens)
        self._rope_cache = {}

    # ------------------------------------------------------------ conditioning helpers

    @property
    def dtype(self):
        return self.embed.weight.dtype

    def condition(self, src, instructions):
        """Build an :class:`EditCondition` from source latents and instruction strings."""
        src = np.asarray(src, dtype=self.dtype)
        if isinstance(instructions, str):
            instructions = [instructions] * src.shape[0]
        text, valid = self.text_embedder.embed(instructions, dtype=self.dtype)
        return EditCondition(src, text, valid)

    def null_condition(self, cond):
        """Same source, empty instruction: the unconditional branch for guidance."""
        text, valid = self.text_embedder.embed([""] * cond.batch, dtype=self.dtype)
        return EditCondition(cond.src, text, valid)

    def new_cache(self):
        return KVCache(self.config.blocks, self.config.window_chunks)

    # ------------------------------------------------------------ internals

    def _rope(self, frames, frame_offset, dtype):
        cfg = self.config
        key = (frames, frame_offset, np.dtype(dtype).str)
        if key not in self._rope_cache:
            coords = token_coords(frames, cfg.latent_height // cfg.patch, cfg.latent_width // cfg.patch, frame_offset)
            cos, sin = rope_tables(coords, cfg.head_dim, cfg.rope_base)
            P = rotation_matrix(cfg.head_dim)
            self._rope_cache[key] = tuple(Tensor(a.astype(dtype)) for a in (cos, sin, P))
        return self._rope_cache[key]

    def _frame_times(self, t, B, T):
        t = np.asarray(t, dtype=np.float64)
        if t.ndim == 0:
            return np.full((B, 1), float(t))
        if t.ndim == 1:
            if t.shape[0] != B:
                raise ValueError(f"t has {t.shape[0]} entries for batch {B}")
            return t[:, None]
        if t.ndim == 2 and t.shape[0] == B:
            if t.shape[1] == T:
                return t
            cl = self.config.chunk_latents
            if t.shape[1] * cl == T:
                # one noise level per chunk
                return np.repeat(t, cl, axis=1)
        raise ValueError(f"cannot interpret t of shape {t.shape} for {T} latent frames")

    def _check_inputs(self, x, cond):
        cfg = self.config
        if x.ndim != 5:
            raise ValueError(f"expected noisy target [B, T, C, H, W], got shape {x.shape}")
        expect = (cfg.latent_channels, cfg.latent_height, cfg.latent_width)
        if tuple(x.shape[2:]) != expect:
            raise ValueError(f"latent frame shape {tuple(x.shape[2:])} does not match config {expect}")
        if tuple(cond.src.shape) != tuple(x.shape):
            raise ValueError(f"source shape {cond.src.shape} differs from noisy target shape {x.shape}")

    def _embed_tokens(self, x, cond):
        p = self.config.patch
        src = Tensor(np.asarray(cond.src, dtype=x.dtype))
        if self.config.conditioning == "channel":
            return self.embed(patchify_rearrange(channel_concat(src, x), p))
        tgt = self.embed(patchify_rearrange(x, p))
        return F.concat([self.embed(patchify_rearrange(src, p)), tgt], axis=1)

    def _trunk(self, x, t, cond, frame_offset, allowed, past_per_layer):
        cfg = self.config
        x = x if isinstance(x, Tensor) else Tensor(np.asarray(x, dtype=self.dtype))
        self._check_inputs(x, cond)
        B, T = x.shape[:2]
        seq = cfg.conditioning == "sequence"
        ft = self._frame_times(t, B, T)
        if seq:
            ft = np.concatenate([np.broadcast_to(ft, (B, T)), np.broadcast_to(ft, (B, T))], axis=1) if ft.shape[1] > 1 else ft
        temb = self.time(ft, x.dtype)
        temb = temb.reshape(B, ft.shape[1], 1, cfg.hidden)
        context = self.text_proj(Tensor(np.asarray(cond.text, dtype=x.dtype)))
        valid = np.asarray(cond.text_mask, dtype=bool)

        h = self._embed_tokens(x, cond)
        if seq:
            rope = self._rope(T, frame_offset, x.dtype)
            cos, sin, P = rope
            rope = (F.concat([cos, cos], axis=0), F.concat([sin, sin], axis=0), P)
        else:
            rope = self._rope(T, frame_offset, x.dtype)
        new_kv = []
        for i, block in enumerate(self.blocks):
            past = past_per_layer[i] if past_per_layer else ()
            h, kv = block(h, temb, rope, context, valid, allowed, past)
            new_kv.append(kv)
        if seq:
            h = h[:, T:]
            temb = temb[:, T:] if temb.shape[1] > 1 else temb
        shift, scale = F.split(self.final_mod(F.silu(temb)), 2, axis=-1)
        out = self.head(_modulate(h, shift, scale))
        v = unpatchify(out, cfg.patch, cfg.latent_channels, cfg.latent_height, cfg.latent_width)
        return v, new_kv

    # ------------------------------------------------------------ public API

    def forward(self, x, t, cond, mask=None, frame_offset=0):
        """Velocity for a whole clip; ``mask`` is an :class:`AttentionMask` or ``None`` (full)."""
        allowed = None
        if mask is not None:
            if not isinstance(mask, AttentionMask):
                raise TypeError("mask must be an AttentionMask")
            n_tokens = x.shape[1] * self.config.tokens_per_frame
            if self.config.conditioning == "sequence":
                raise ValueError("masked attention is only defined for channel conditioning")
            if mask.n_tokens != n_tokens:
                raise ValueError(f"mask covers {mask.n_tokens} tokens but the input has {n_tokens}")
            allowed = mask.token_mask()
        v, _ = self._trunk(x, t, cond, frame_offset, allowed, None)
        return v

    def forward_incremental(self, x_chunk, t, cond_chunk, cache, chunk_index=None, exclude=()):
        """Velocity for one chunk given cached keys/values of earlier chunks.

        Returns ``(velocity, cache')`` where ``cache'`` additionally holds this
        chunk's keys/values (computed from the inputs given here). The input
        cache is left untouched.
        """
        cfg = self.config
        if cfg.conditioning != "channel":
            raise ValueError("incremental decoding needs channel conditioning")
        if cache.n_layers != cfg.blocks:
            raise ValueError(f"cache has {cache.n_layers} layers, model has {cfg.blocks} blocks")
        if cache.window_chunks != cfg.window_chunks:
            raise ValueError(f"cache window {cache.window_chunks} differs from config window {cfg.window_chunks}")
        if x_chunk.shape[1] != cfg.chunk_latents:
            raise ValueError(f"chunk has {x_chunk.shape[1]} latent frames, config expects {cfg.chunk_latents}")
        k = cache.next_index if chunk_index is None else int(chunk_index)
        visible = [e for e in cache.view(exclude) if k - cfg.window_chunks < e.chunk_index < k]
        past = [[(e.keys[i], e.values[i]) for e in visible] for i in range(cfg.blocks)]
        v, new_kv = self._trunk(x_chunk, t, cond_chunk, k * cfg.chunk_latents, None, past)
        entry = CacheEntry(k, tuple(kv[0] for kv in new_kv), tuple(kv[1] for kv in new_kv))
        return v, cache.appended(entry)
