"""Shape configuration for the editor transformer and its plain-text manifest."""
from __future__ import annotations

from dataclasses import asdict, dataclass, fields


@dataclass(frozen=True)
class ModelConfig:
    blocks: int = 4
    hidden: int = 64
    heads: int = 4
    patch: int = 2
    latent_channels: int = 4
    latent_height: int = 8
    latent_width: int = 8
    text_dim: int = 32
    chunk_latents: int = 3
    window_chunks: int = 5
    mlp_ratio: int = 4
    freq_dim: int = 32
    max_text_tokens: int = 8
    rope_base: float = 10000.0
    conditioning: str = "channel"

    def __post_init__(self):
        for name in ("blocks", "hidden", "heads", "patch", "latent_channels", "latent_height",
                     "latent_width", "text_dim", "chunk_latents", "window_chunks", "mlp_ratio",
                     "freq_dim", "max_text_tokens"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be positive")
        if self.hidden % self.heads:
            raise ValueError(f"hidden={self.hidden} is not divisible by heads={self.heads}")
        if (self.hidden // self.heads) % 2:
            raise ValueError("head dimension must be even for rotary encoding")
        if self.latent_height % self.patch or self.latent_width % self.patch:
            raise ValueError(
                f"patch={self.patch} does not divide latent {self.latent_height}x{self.latent_width}"
            )
        if self.freq_dim % 2:
            raise ValueError("freq_dim must be even")
        if self.conditioning not in ("channel", "sequence"):
            raise ValueError(f"unknown conditioning {self.conditioning!r}")

    @property
    def head_dim(self):
        return self.hidden // self.heads

    @property
    def tokens_per_frame(self):
        return (self.latent_height // self.patch) * (self.latent_width // self.patch)

    @property
    def tokens_per_chunk(self):
        return self.chunk_latents * self.tokens_per_frame

    @property
    def in_channels(self):
        # source and noisy target share the token when concatenated along channels
        return 2 * self.latent_channels if self.conditioning == "channel" else self.latent_channels

    def to_manifest(self):
        return "".join(f"{k} = {v}\n" for k, v in asdict(self).items())

    @classmethod
    def from_manifest(cls, text):
        types = {f.name: f.type for f in fields(cls)}
        values = {}
        for line in text.splitlines():
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            key, sep, raw = line.partition("=")
            key, raw = key.strip(), raw.strip()
            if not sep or key not in types:
                raise ValueError(f"bad manifest line: {line!r}")
            kind = types[key]
            values[key] = raw if kind == "str" else float(raw) if kind == "float" else int(raw)
        return cls(**values)


def full_scale_config():
    """Block/width/head counts of the full-size editor, used only for cost arithmetic.

    The latent channel count (16) and spatial size are those of the usual
    Wan 2.1 latent space at 480x832; they do not affect the block structure.
    """
    return ModelConfig(blocks=32, hidden=4096, heads=32, patch=2, latent_channels=16,
                       latent_height=60, latent_width=104, text_dim=4096)
