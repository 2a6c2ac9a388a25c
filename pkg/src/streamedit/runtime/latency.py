"""Analytic first-chunk latency and throughput model."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, fields
from importlib import resources
from pathlib import Path


@dataclass(frozen=True)
class TimingProfile:
    """Per-stage timings of one deployment configuration (milliseconds)."""

    name: str
    ae_ms_first: float
    model_ms_first: float
    nfe: int
    streaming: bool = False
    capture_fps: float = 16.0
    first_chunk_frames: int = 81
    next_chunk_frames: int = 0
    total_frames: int = 81
    ae_ms_next: float = None
    model_ms_next: float = None
    derived: tuple = ()
    printed: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        for f in ("ae_ms_first", "model_ms_first", "capture_fps", "ae_ms_next", "model_ms_next"):
            v = getattr(self, f)
            if v is not None and (v < 0 or not math.isfinite(v)):
                raise ValueError(f"{f} must be a non-negative finite number")
        if self.capture_fps <= 0:
            raise ValueError("capture_fps must be positive")
        if self.nfe < 1:
            raise ValueError("nfe must be positive")
        if self.first_chunk_frames < 1 or (self.first_chunk_frames - 1) % 4:
            raise ValueError("first chunk must hold 1 + 4k frames")
        if self.streaming:
            if self.next_chunk_frames < 4 or self.next_chunk_frames % 4:
                raise ValueError("continuation chunks must hold a positive multiple of 4 frames")
            if self.ae_ms_next is None or self.model_ms_next is None:
                raise ValueError("streaming profiles need steady-state ae_ms_next and model_ms_next")
        object.__setattr__(self, "derived", tuple(self.derived))

    @classmethod
    def from_dict(cls, d):
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown profile fields: {sorted(unknown)}")
        return cls(**d)


def recording_ms(frames, fps):
    """Capture time of ``frames`` at ``fps``, truncated to whole milliseconds as reported."""
    return math.floor(1000.0 * frames / fps)


def first_chunk_breakdown(p):
    rec = recording_ms(p.first_chunk_frames, p.capture_fps)
    return {"recording": rec, "ae": p.ae_ms_first, "model": p.model_ms_first,
            "total": rec + p.ae_ms_first + p.model_ms_first}


def first_chunk_latency(p):
    return first_chunk_breakdown(p)["total"]


def throughput(p, pipelined=False, include_ae=True):
    """Frames per second once processing is under way.

    Non-streaming profiles process the whole clip at once. Streaming profiles
    use the steady-state (continuation) chunk, either sequentially (stage
    times add up) or pipelined (the slowest stage sets the period).
    """
    if not p.streaming:
        ms = p.model_ms_first + (p.ae_ms_first if include_ae else 0.0)
        frames = p.total_frames
    else:
        stages = [p.model_ms_next] + ([p.ae_ms_next] if include_ae else [])
        frames = p.next_chunk_frames
        if pipelined:
            if any(s <= 0 for s in stages):
                raise ValueError("pipelined throughput needs every stage to take positive time")
            ms = max(stages)
        else:
            ms = sum(stages)
    if ms <= 0:
        raise ValueError("processing time must be positive")
    return 1000.0 * frames / ms


def back_solve_streaming(model_fps, model_ae_fps, next_chunk_frames=12):
    """Steady-state stage times implied by printed model-only and model+AE throughputs."""
    model_ms = 1000.0 * next_chunk_frames / model_fps
    ae_ms = 1000.0 * next_chunk_frames / model_ae_fps - model_ms
    return model_ms, ae_ms


def load_profiles(path=None):
    if path is None:
        text = resources.files("streamedit.data").joinpath("table2_profiles.json").read_text()
    else:
        text = Path(path).read_text()
    data = json.loads(text)
    items = data["profiles"] if isinstance(data, dict) and "profiles" in data else data
    if isinstance(items, dict):
        items = [items]
    return [TimingProfile.from_dict(d) for d in items]


def profile_report(p):
    b = first_chunk_breakdown(p)
    lines = [
        f"profile: {p.name}",
        f"  streaming: {'yes' if p.streaming else 'no'}",
        f"  NFEs: {p.nfe}",
        f"  first chunk size: {p.first_chunk_frames} frames",
        f"  next chunk size: {str(p.next_chunk_frames) + ' frames' if p.streaming else 'N/A'}",
        "  first chunk latency [ms]",
        f"    recording: {b['recording']}",
        f"    AE: {b['ae']:g}",
        f"    model: {b['model']:g}",
        f"    total: {round(b['total'])}{_ref(p, 'total_ms')}",
        "  throughput [fps]",
        f"    model: {throughput(p, include_ae=False):.1f}{_ref(p, 'model_fps')}",
        f"    model + AE: {throughput(p):.2f}{_ref(p, 'model_ae_fps')}",
    ]
    if p.streaming:
        lines.append(f"    model + AE, pipelined: {throughput(p, pipelined=True):.2f}")
    if p.derived:
        lines.append(f"  derived inputs: {', '.join(p.derived)}")
    return "\n".join(lines)


def _ref(p, key):
    return f"  (printed {p.printed[key]})" if key in p.printed else ""


def report(profiles):
    return "\n\n".join(profile_report(p) for p in profiles)
