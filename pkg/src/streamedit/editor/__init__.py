"""Toy diffusion-transformer video editor."""
from .cache import CacheEntry, KVCache
from .checkpoint import load_checkpoint, save_checkpoint
from .config import ModelConfig, full_scale_config
from .layout import (
    AttentionCost,
    attention_cost,
    channel_concat,
    patchify,
    patchify_rearrange,
    sequence_concat,
    token_count,
    unpatchify,
)
from .masks import AttentionMask, build_chunk_causal_mask, full_mask
from .model import EditCondition, EditorTransformer, attend
from .text import HashTextEmbedder

__all__ = [
    "AttentionCost",
    "AttentionMask",
    "CacheEntry",
    "EditCondition",
    "EditorTransformer",
    "HashTextEmbedder",
    "KVCache",
    "ModelConfig",
    "attend",
    "attention_cost",
    "build_chunk_causal_mask",
    "channel_concat",
    "full_mask",
    "full_scale_config",
    "load_checkpoint",
    "patchify",
    "patchify_rearrange",
    "save_checkpoint",
    "sequence_concat",
    "token_count",
    "unpatchify",
]
