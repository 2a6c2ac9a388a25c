from .latency import (
    TimingProfile,
    back_solve_streaming,
    first_chunk_breakdown,
    first_chunk_latency,
    load_profiles,
    profile_report,
    recording_ms,
    report,
    throughput,
)
from .stream import (
    STAGES,
    IdentityEditor,
    StallEvent,
    StreamConfig,
    StreamResult,
    StreamState,
    TimingReport,
    measure,
    offline_rollout,
    run_stream,
)
