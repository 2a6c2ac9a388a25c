"""Chunk-by-chunk streaming editor: capture -> encode -> denoise -> decode.

Stages talk through bounded FIFO queues. Two clocks are available: the wall
clock (``time.perf_counter``) and a simulated clock in which every stage takes
a configured duration and blocking on full/empty queues is replayed exactly,
so period and latency figures are deterministic whatever the thread schedule.
"""
from __future__ import annotations

import queue
import threading
import time
from dataclasses import dataclass, field

import numpy as np

from ..codec import BlockDCTCodec, RGBVideo, chunk_boundaries, latent_length, split_frames
from ..distill.rollout import chunk_noise, excluded_chunks, generate_chunk, self_forcing_rollout
from ..editor.cache import KVCache

STAGES = ("capture", "encode", "denoise", "decode")
_DONE = object()


@dataclass
class StreamConfig:
    steps: int = 4
    seed: int = 0
    instruction: str = ""
    mask_first_for_last: bool = True
    init: str = "noise"  # or "source": start denoising from the source latents
    mode: str = "pipelined"  # or "sequential"
    clock: str = "wall"  # or "simulated"
    stage_ms: dict = field(default_factory=dict)  # simulated durations: stage -> ms or callable(chunk) -> ms
    queue_size: int = 1
    capture_fps: float = 16.0
    stage_delay: object = None  # optional callable(stage, chunk) -> seconds of real sleep

    def __post_init__(self):
        if self.steps < 1:
            raise ValueError("steps must be positive")
        if self.init not in ("noise", "source"):
            raise ValueError(f"unknown init {self.init!r}")
        if self.mode not in ("pipelined", "sequential"):
            raise ValueError(f"unknown mode {self.mode!r}")
        if self.clock not in ("wall", "simulated"):
            raise ValueError(f"unknown clock {self.clock!r}")
        if self.queue_size < 1:
            raise ValueError("queue_size must be positive")


@dataclass
class StallEvent:
    stage: str
    chunk: int
    waited_ms: float


@dataclass
class StreamState:
    kv_cache: KVCache = None
    chunks_emitted: int = 0
    frames_emitted: int = 0
    timestamps: dict = field(default_factory=dict)  # (stage, chunk) -> (start_ms, end_ms)

    def emit(self, n_frames):
        self.chunks_emitted += 1
        self.frames_emitted += n_frames


@dataclass
class StreamResult:
    chunks: list
    state: StreamState
    records: list
    stalls: list
    config: StreamConfig

    @property
    def frames(self):
        return np.concatenate(self.chunks, axis=0)


@dataclass
class TimingReport:
    stage_mean_ms: dict
    stage_max_ms: dict
    period_ms: float
    fps: float
    first_chunk_latency_ms: float
    chunks: int
    frames: int

    def lines(self):
        out = [f"{s}: mean {self.stage_mean_ms[s]:.2f} ms, max {self.stage_max_ms[s]:.2f} ms" for s in STAGES]
        out += [f"steady-state period: {self.period_ms:.2f} ms", f"throughput: {self.fps:.2f} fps",
                f"first chunk out after: {self.first_chunk_latency_ms:.2f} ms",
                f"chunks: {self.chunks}, frames: {self.frames}"]
        return out


# ---------------------------------------------------------------- editors


class IdentityEditor:
    """Velocity identically zero; with ``init='source'`` the stream reproduces its input."""

    def __init__(self, chunk_latents=3, window_chunks=5, dtype=np.float32):
        from ..editor.config import ModelConfig

        self.config = ModelConfig(chunk_latents=chunk_latents, window_chunks=window_chunks)
        self.dtype = dtype

    def condition(self, src, instruction):
        from ..editor.model import EditCondition

        src = np.asarray(src, dtype=self.dtype)
        return EditCondition(src, np.zeros((src.shape[0], 1, 1), self.dtype), np.ones((src.shape[0], 1), bool))

    def new_cache(self):
        return KVCache(1, self.config.window_chunks)

    def forward_incremental(self, x, t, cond, cache, chunk_index=None, exclude=()):
        from ..autodiff import Tensor
        from ..editor.cache import CacheEntry

        data = x.data if isinstance(x, Tensor) else np.asarray(x)
        k = cache.next_index if chunk_index is None else chunk_index
        zero = Tensor(np.zeros((1,), self.dtype))
        return Tensor(np.zeros_like(data)), cache.appended(CacheEntry(k, (zero,), (Tensor(np.zeros((1,), self.dtype)),)))


# ---------------------------------------------------------------- clocks


class _WallClock:
    def __init__(self):
        self.t0 = time.perf_counter()

    def now(self):
        return 1000.0 * (time.perf_counter() - self.t0)


def _duration(spec, stage, chunk, default):
    v = spec.get(stage, default)
    return float(v(chunk)) if callable(v) else float(v)


# ---------------------------------------------------------------- the pipeline


class _Pipeline:
    def __init__(self, source_chunks, editor, codec, config, n_chunks):
        self.source_chunks = source_chunks
        self.editor = editor
        self.codec = codec
        self.config = config
        self.n_chunks = n_chunks
        self.state = StreamState(kv_cache=editor.new_cache())
        self.records = []
        self.stalls = []
        self.outputs = []
        self.clock = _WallClock()
        self.lock = threading.Lock()
        cl = editor.config.chunk_latents
        self.chunk_latents = cl

    # --- stage bodies (pure work, no timing)

    def do_capture(self, k):
        return self.source_chunks[k]

    def do_encode(self, k, frames):
        lat = self.codec.encode_chunk(frames, first=k == 0)
        if lat.shape[0] != self.chunk_latents:
            raise ValueError(f"chunk {k} encodes to {lat.shape[0]} latents, editor expects {self.chunk_latents}")
        return lat

    def do_denoise(self, k, lat):
        src = lat[None].astype(self.editor.dtype)
        cond = self.editor.condition(src, self.config.instruction)
        if self.config.init == "source":
            x0 = src.copy()
        else:
            x0 = chunk_noise(self.config.seed, k, src.shape, self.editor.dtype)
        n_total = self.n_chunks if self.n_chunks is not None else k + 2
        exclude = excluded_chunks(k, n_total, self.config.mask_first_for_last)
        x, cache, rec = generate_chunk(self.editor, self.state.kv_cache, cond, x0, k, self.config.steps, exclude)
        if cache.next_index != k + 1:
            raise RuntimeError(f"cache corrupted: expected next chunk {k + 1}, cache says {cache.next_index}")
        self.state.kv_cache = cache
        self.records.append(rec)
        return x[0]

    def do_decode(self, k, lat):
        return self.codec.decode_chunk(lat, first=k == 0)

    def work(self, stage, k, item):
        delay = self.config.stage_delay
        if delay is not None:
            time.sleep(delay(stage, k))
        if stage == "capture":
            return self.do_capture(k)
        if stage == "encode":
            return self.do_encode(k, item)
        if stage == "denoise":
            return self.do_denoise(k, item)
        return self.do_decode(k, item)

    def sim_duration(self, stage, k):
        if stage == "capture":
            n = self.source_chunks[k].shape[0]
            return _duration(self.config.stage_ms, stage, k, 1000.0 * n / self.config.capture_fps)
        return _duration(self.config.stage_ms, stage, k, 0.0)

    def stamp(self, stage, k, start, end):
        with self.lock:
            self.state.timestamps[(stage, k)] = (start, end)

    def emit(self, k, frames):
        self.outputs.append(frames)
        self.state.emit(frames.shape[0])

    # --- sequential: one loop, stage times add up

    def run_sequential(self):
        sim = self.config.clock == "simulated"
        t = 0.0
        for k in range(len(self.source_chunks)):
            item = None
            for stage in STAGES:
                start = t if sim else self.clock.now()
                item = self.work(stage, k, item)
                end = start + self.sim_duration(stage, k) if sim else self.clock.now()
                t = end
                self.stamp(stage, k, start, end)
            self.emit(k, item)

    # --- pipelined: one thread per stage, bounded queues

    def run_pipelined(self):
        sim = self.config.clock == "simulated"
        n = len(self.source_chunks)
        qs = [queue.Queue(maxsize=self.config.queue_size) for _ in STAGES[1:]]
        # simulated-clock bookkeeping: when each stage started each chunk
        started = {s: {} for s in STAGES}
        started_ev = {s: {} for s in STAGES}
        for s in STAGES:
            for k in range(n):
                started_ev[s][k] = threading.Event()
        errors = []
        stop = threading.Event()
        cap = self.config.queue_size

        def put(q, item):
            while not stop.is_set():
                try:
                    q.put(item, timeout=0.05)
                    return True
                except queue.Full:
                    pass
            return False

        def get(q):
            while not stop.is_set():
                try:
                    return q.get(timeout=0.05)
                except queue.Empty:
                    pass
            return _DONE

        def wait(ev):
            while not stop.is_set():
                if ev.wait(0.05):
                    return True
            return False

        def worker(idx):
            stage = STAGES[idx]
            inq = qs[idx - 1] if idx > 0 else None
            outq = qs[idx] if idx < len(qs) else None
            free_at = 0.0
            try:
                for k in range(n):
                    item, ready = None, 0.0
                    if inq is not None:
                        got = get(inq)
                        if got is _DONE:
                            return
                        item, ready = got
                    if sim:
                        start = max(free_at, ready)
                        if k > 0 and ready > free_at:
                            self.stalls.append(StallEvent(stage, k, ready - free_at))
                    else:
                        start = self.clock.now()
                    started[stage][k] = start
                    started_ev[stage][k].set()
                    result = self.work(stage, k, item)
                    end = start + self.sim_duration(stage, k) if sim else self.clock.now()
                    self.stamp(stage, k, start, end)
                    free_at = end
                    if outq is None:
                        self.emit(k, result)
                        continue
                    if not put(outq, (result, end)):
                        return
                    if sim and k >= cap:
                        # blocked after service until the consumer took item k - cap off the queue
                        nxt = STAGES[idx + 1]
                        if not wait(started_ev[nxt][k - cap]):
                            return
                        free_at = max(end, started[nxt][k - cap])
            except BaseException as exc:  # noqa: BLE001
                errors.append(exc)
                stop.set()

        threads = [threading.Thread(target=worker, args=(i,), daemon=True) for i in range(len(STAGES))]
        for th in threads:
            th.start()
        for th in threads:
            th.join()
        if errors:
            raise errors[0]

    def run(self):
        if self.config.mode == "sequential":
            self.run_sequential()
        else:
            self.run_pipelined()
        if self.n_chunks is not None and self.state.chunks_emitted != self.n_chunks:
            raise RuntimeError(f"emitted {self.state.chunks_emitted} of {self.n_chunks} chunks")
        return StreamResult(self.outputs, self.state, self.records, self.stalls, self.config)


def run_stream(source, editor, config=None, codec=None, instruction=None):
    """Edit a video chunk by chunk.

    ``source`` is an :class:`RGBVideo`, a frame array, or a list of RGB chunks
    (9 frames, then 12 each). Returns a :class:`StreamResult` whose chunks are
    emitted in order.
    """
    config = config or StreamConfig()
    if instruction is not None:
        config.instruction = instruction
    codec = codec or BlockDCTCodec()
    cl = editor.config.chunk_latents
    if isinstance(source, RGBVideo):
        chunks = split_frames(source.frames, cl)
    elif isinstance(source, np.ndarray):
        chunks = split_frames(source, cl)
    else:
        chunks = list(source)
    expected = chunk_boundaries(cl * len(chunks), cl)
    for k, (c, (n_rgb, _)) in enumerate(zip(chunks, expected)):
        if c.shape[0] != n_rgb:
            raise ValueError(f"chunk {k} holds {c.shape[0]} frames, expected {n_rgb}")
    return _Pipeline(chunks, editor, codec, config, len(chunks)).run()


def offline_rollout(source, editor, config=None, codec=None):
    """Encode the whole clip, run the causal rollout in one go, decode. Reference for the stream."""
    config = config or StreamConfig()
    codec = codec or BlockDCTCodec()
    frames = source.frames if isinstance(source, RGBVideo) else np.asarray(source)
    cl = editor.config.chunk_latents
    n_chunks = latent_length(frames.shape[0]) // cl
    lat = codec.encode(RGBVideo(frames)).latents[None].astype(editor.dtype)
    cond = editor.condition(lat, config.instruction)
    noise = lat.copy() if config.init == "source" else None
    video, records = self_forcing_rollout(editor, cond, n_chunks, config.steps, seed=config.seed, noise=noise,
                                          mask_first_for_last=config.mask_first_for_last)
    return codec.decode_chunk(video[0], first=True), records


def measure(result):
    """Per-stage durations, steady-state period and derived throughput of a finished run."""
    ts = result.state.timestamps
    n = result.state.chunks_emitted
    mean, mx = {}, {}
    for s in STAGES:
        d = [ts[(s, k)][1] - ts[(s, k)][0] for k in range(n)]
        mean[s] = float(np.mean(d))
        mx[s] = float(np.max(d))
    out_times = [ts[("decode", k)][1] for k in range(n)]
    period = float(np.mean(np.diff(out_times))) if n > 1 else float("nan")
    frames_next = result.chunks[1].shape[0] if n > 1 else result.chunks[0].shape[0]
    fps = 1000.0 * frames_next / period if n > 1 and period > 0 else float("nan")
    return TimingReport(mean, mx, period, fps, out_times[0], n, result.state.frames_emitted)
