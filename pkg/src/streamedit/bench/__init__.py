from .benchmark import BenchEntry, BenchSource, build_benchmark, expected_count, load_manifest, load_sources, save_manifest
from .cluster import DiversityKMeans, diverse_sources, embed_texts, select_diverse, source_text
from .scoring import (
    METRICS,
    AgreementResult,
    BenchmarkReport,
    MockJudge,
    ScoreRecord,
    aggregate,
    expand_agreement_rows,
    fixture_records,
    load_agreement_table,
    load_scores,
    load_vlm_table,
    preference_agreement,
    save_scores,
)
from .tasks import CONDITIONING, DEFAULT_TEMPLATES, DISPLAY_NAMES, TASKS, conditioning_stub
