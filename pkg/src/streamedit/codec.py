"""Exactly invertible stand-in for a causal video autoencoder.

Frames are grouped causally in time (the first group holds one frame, every
later group four) and cut into 8x8 spatial blocks. Each group-block
``[4, 3, 8, 8]`` (the single-frame group is replicated to four frames) goes
through an orthonormal 3-D DCT, and the 768 coefficients become the latent
channels. Latents therefore have the 8x8x4 compression geometry of the real
autoencoder with no information loss.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.fft import dctn, idctn
from sklearn.base import BaseEstimator, TransformerMixin

from .autodiff.io import read_header, write_header

SPATIAL = 8
TEMPORAL = 4
RGB = 3
FULL_CHANNELS = RGB * TEMPORAL * SPATIAL * SPATIAL
RAW_MAGIC = "RAWVIDEO v1"
DEFAULT_FPS = 16.0


def latent_length(n_frames):
    if n_frames < 1 or (n_frames - 1) % TEMPORAL:
        raise ValueError(f"frame count {n_frames} is not of the form 1 + 4k")
    return 1 + (n_frames - 1) // TEMPORAL


def frame_length(n_latents):
    if n_latents < 1:
        raise ValueError("need at least one latent frame")
    return 1 + TEMPORAL * (n_latents - 1)


def temporal_map(n_frames, start=0, first=True):
    """RGB frame span ``(start, stop)`` of each latent frame."""
    spans = []
    pos = start
    if first:
        latent_length(n_frames)
        spans.append((pos, pos + 1))
        pos += 1
        n_frames -= 1
    elif n_frames % TEMPORAL:
        raise ValueError(f"a continuation chunk needs a multiple of {TEMPORAL} frames, got {n_frames}")
    for _ in range(n_frames // TEMPORAL):
        spans.append((pos, pos + TEMPORAL))
        pos += TEMPORAL
    return spans


def chunk_boundaries(total_latents, chunk_latents=3):
    """``(rgb_frames, latent_frames)`` per streaming chunk."""
    if chunk_latents < 1 or total_latents < 1 or total_latents % chunk_latents:
        raise ValueError(f"{total_latents} latents do not split into chunks of {chunk_latents}")
    n = total_latents // chunk_latents
    first = (1 + TEMPORAL * (chunk_latents - 1), chunk_latents)
    return [first] + [(TEMPORAL * chunk_latents, chunk_latents)] * (n - 1)


@dataclass
class RGBVideo:
    frames: np.ndarray  # [T, 3, H, W], values in [0, 1]
    fps: float = DEFAULT_FPS

    def __post_init__(self):
        f = np.asarray(self.frames)
        if f.ndim != 4 or f.shape[1] != RGB:
            raise ValueError(f"expected frames [T, 3, H, W], got {f.shape}")
        if f.shape[0] < 1:
            raise ValueError("video needs at least one frame")
        if f.shape[2] % SPATIAL or f.shape[3] % SPATIAL:
            raise ValueError(f"height and width must be multiples of {SPATIAL}, got {f.shape[2:]}")
        self.frames = f

    @property
    def n_frames(self):
        return self.frames.shape[0]


@dataclass
class LatentVideo:
    latents: np.ndarray  # [T_lat, C_lat, H/8, W/8]
    temporal_map: list = field(default_factory=list)

    def __post_init__(self):
        if not self.temporal_map:
            self.temporal_map = temporal_map(frame_length(self.latents.shape[0]))
        _check_map(self.temporal_map, self.latents.shape[0])


def _check_map(spans, n_latents):
    if len(spans) != n_latents:
        raise ValueError(f"temporal map has {len(spans)} spans for {n_latents} latent frames")
    for i, (a, b) in enumerate(spans):
        if i and a != spans[i - 1][1]:
            raise ValueError("temporal map spans must be contiguous")
        if b - a not in (1, TEMPORAL) or (b - a == 1) != (i == 0 and a == 0):
            raise ValueError(f"malformed temporal span {(a, b)} at position {i}")


def _channel_order(keep):
    # low temporal/spatial frequencies first, so truncation drops detail first
    c, t, u, v = np.meshgrid(np.arange(RGB), np.arange(TEMPORAL), np.arange(SPATIAL), np.arange(SPATIAL), indexing="ij")
    order = np.lexsort((c.ravel(), (t + u + v).ravel()))
    return order[:keep]


def _encode_group(frames):
    """``[n, 3, H, W]`` (n = 1 or 4) -> ``[768, H/8, W/8]``."""
    if frames.shape[0] == 1:
        frames = np.repeat(frames, TEMPORAL, axis=0)
    _, C, H, W = frames.shape
    blocks = frames.reshape(TEMPORAL, C, H // SPATIAL, SPATIAL, W // SPATIAL, SPATIAL)
    coeffs = dctn(blocks, type=2, axes=(0, 3, 5), norm="ortho")
    # -> [C, 4, 8, 8, Hb, Wb]
    return coeffs.transpose(1, 0, 3, 5, 2, 4).reshape(FULL_CHANNELS, H // SPATIAL, W // SPATIAL)


def _decode_group(latent, single):
    _, Hb, Wb = latent.shape
    coeffs = latent.reshape(RGB, TEMPORAL, SPATIAL, SPATIAL, Hb, Wb).transpose(1, 0, 4, 2, 5, 3)
    frames = idctn(coeffs, type=2, axes=(0, 3, 5), norm="ortho").reshape(TEMPORAL, RGB, Hb * SPATIAL, Wb * SPATIAL)
    return frames.mean(axis=0, keepdims=True) if single else frames


class BlockDCTCodec(TransformerMixin, BaseEstimator):
    """Stateless codec with a scikit-learn transformer face.

    Parameters
    ----------
    n_channels : int or None
        Keep only the ``n_channels`` lowest-frequency coefficients (lossy).
        ``None`` keeps all 768 and the round trip is exact up to rounding.
    dtype : numpy dtype of the produced latents.
    """

    def __init__(self, n_channels=None, dtype=np.float32):
        self.n_channels = n_channels
        self.dtype = dtype

    def fit(self, X=None, y=None):
        keep = FULL_CHANNELS if self.n_channels is None else int(self.n_channels)
        if not 1 <= keep <= FULL_CHANNELS:
            raise ValueError(f"n_channels must lie in [1, {FULL_CHANNELS}]")
        self.n_channels_ = keep
        self.channel_index_ = np.sort(_channel_order(keep)) if keep < FULL_CHANNELS else np.arange(FULL_CHANNELS)
        return self

    def _ready(self):
        if not hasattr(self, "n_channels_"):
            self.fit()

    # -------------------------------------------------------------- chunk level

    def encode_chunk(self, frames, first):
        """Encode ``1 + 4k`` frames (``first``) or ``4k`` frames (continuation)."""
        self._ready()
        frames = np.asarray(frames, dtype=np.float64)
        spans = temporal_map(frames.shape[0], first=first)
        out = []
        for a, b in spans:
            out.append(_encode_group(frames[a:b])[self.channel_index_])
        return np.stack(out).astype(self.dtype)

    def decode_chunk(self, latents, first):
        self._ready()
        latents = np.asarray(latents, dtype=np.float64)
        if latents.shape[1] != self.n_channels_:
            raise ValueError(f"latents have {latents.shape[1]} channels, codec expects {self.n_channels_}")
        frames = []
        for i, lat in enumerate(latents):
            full = np.zeros((FULL_CHANNELS,) + lat.shape[1:])
            full[self.channel_index_] = lat
            frames.append(_decode_group(full, single=first and i == 0))
        return np.concatenate(frames).astype(np.float32)

    # -------------------------------------------------------------- video level

    def encode(self, video):
        if not isinstance(video, RGBVideo):
            video = RGBVideo(np.asarray(video))
        latent_length(video.n_frames)
        lat = self.encode_chunk(video.frames, first=True)
        return LatentVideo(lat, temporal_map(video.n_frames))

    def decode(self, latent, fps=DEFAULT_FPS):
        if not isinstance(latent, LatentVideo):
            latent = LatentVideo(np.asarray(latent))
        _check_map(latent.temporal_map, latent.latents.shape[0])
        return RGBVideo(self.decode_chunk(latent.latents, first=True), fps)

    def encode_stream(self, chunks):
        """Encode an iterable of RGB chunks (9 frames, then 12, ...) one at a time."""
        for i, frames in enumerate(chunks):
            yield self.encode_chunk(frames, first=i == 0)

    def decode_stream(self, chunks):
        for i, lat in enumerate(chunks):
            yield self.decode_chunk(lat, first=i == 0)

    def transform(self, X):
        return self.encode(X).latents

    def inverse_transform(self, X):
        return self.decode(X).frames


def split_frames(frames, chunk_latents=3):
    """Cut an RGB frame array into streaming chunks (9 frames, then 12 each)."""
    total = latent_length(frames.shape[0])
    out, pos = [], 0
    for n_rgb, _ in chunk_boundaries(total, chunk_latents):
        out.append(frames[pos:pos + n_rgb])
        pos += n_rgb
    return out


def save_raw_video(path, video):
    frames = np.ascontiguousarray(video.frames, dtype="<f4")
    T, _, H, W = frames.shape
    with open(path, "wb") as fh:
        write_header(fh, {"T": T, "H": H, "W": W, "fps": repr(float(video.fps))}, magic=RAW_MAGIC)
        fh.write(frames.tobytes(order="C"))


def load_raw_video(path):
    with open(path, "rb") as fh:
        fields = read_header(fh, RAW_MAGIC)
        payload = fh.read()
    T, H, W = int(fields["T"]), int(fields["H"]), int(fields["W"])
    expect = 4 * T * RGB * H * W
    if len(payload) != expect:
        raise ValueError(f"payload has {len(payload)} bytes, expected {expect}")
    frames = np.frombuffer(payload, dtype="<f4").reshape(T, RGB, H, W).astype(np.float32)
    return RGBVideo(frames, float(fields["fps"]))
