from .adapters import (
    HAND_CONFIDENCE,
    MASK_CONFIDENCE,
    PRINTED_OVERALL_RATE,
    PRINTED_STAGE_RATES,
    PRINTED_STAGE_UNITS,
    TEXT_CONFIDENCE,
    InteractionCheck,
    MockGroundedSegmenter,
    MockHandDetector,
    MockObjectNamer,
    VideoSelector,
    default_stages,
    edit_review_stage,
)
from .geometry import TAU_EDGE, TAU_KEYPOINT, GateResult, interaction_gate
from .ledger import RetentionLedger, StageCount, product_of_rates
from .manifest import load_items, load_pipeline_manifest, save_items
from .pairs import CATEGORIES, DatasetStats, EditPair, Version, build_pairs, dataset_stats
from .pipeline import (
    AUTOMATIC,
    HUMAN_REVIEW,
    DecisionQueue,
    Item,
    Pipeline,
    PipelineResult,
    Rejection,
    StageSpec,
    expand,
    run_pipeline,
)
from .synthetic import category_fixture_pairs, load_category_fixture, synthetic_decisions, synthetic_items
