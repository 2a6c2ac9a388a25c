"""Model-backed stage interfaces with deterministic mock implementations.

Each mock reads precomputed outputs from ``item.data``; a real implementation
would run the detector/segmenter/VLM instead and fill the same fields.
"""
from __future__ import annotations

from dataclasses import replace

import numpy as np

from .geometry import TAU_EDGE, TAU_KEYPOINT, interaction_gate
from .pipeline import HUMAN_REVIEW, StageSpec

HAND_CONFIDENCE = 0.75
MASK_CONFIDENCE = 0.4
TEXT_CONFIDENCE = 0.35

ALLOWED_CAMERAS = (
    "GoPro Hero 4",
    "GoPro Hero Black 7",
    "GoPro Hero Black 8",
    "GoPro Hero Black 9",
    "GoPro Hero Silver 7",
    "GoPro Max",
)


class VideoSelector:
    """Camera model whitelist, monocular capture and a sharpness/jitter score threshold."""

    def __init__(self, cameras=ALLOWED_CAMERAS, min_quality=0.5):
        self.cameras = set(cameras)
        self.min_quality = min_quality

    def __call__(self, item):
        d = item.data
        if d.get("camera") not in self.cameras:
            return False, f"camera {d.get('camera')!r} not allowed"
        if not d.get("monocular", True):
            return False, "binocular capture"
        if d.get("quality", 1.0) < self.min_quality:
            return False, "too much jitter or blur"
        return True, ""


class MockHandDetector:
    """Keeps a video if any frame has a hand detection at or above ``threshold``."""

    def __init__(self, threshold=HAND_CONFIDENCE):
        self.threshold = threshold

    def __call__(self, item):
        scores = np.asarray(item.data.get("hand_scores", []), dtype=float)
        if scores.size == 0 or scores.max() < self.threshold:
            return False, "no confident hand detection"
        return True, ""


class MockObjectNamer:
    """Names the manipulated object; no name means no meaningful interaction."""

    def __call__(self, item):
        name = item.data.get("object_name")
        return (True, "") if name else (False, "no hand-object interaction named")


class MockGroundedSegmenter:
    """Keeps a video if some frame clears both the mask and the text confidence thresholds."""

    def __init__(self, mask_threshold=MASK_CONFIDENCE, text_threshold=TEXT_CONFIDENCE):
        self.mask_threshold = mask_threshold
        self.text_threshold = text_threshold

    def __call__(self, item):
        m = np.asarray(item.data.get("mask_scores", []), dtype=float)
        t = np.asarray(item.data.get("text_scores", []), dtype=float)
        if m.size == 0 or m.shape != t.shape:
            return False, "no grounded mask"
        if not np.any((m >= self.mask_threshold) & (t >= self.text_threshold)):
            return False, "low mask confidence in every frame"
        return True, ""


class InteractionCheck:
    def __init__(self, tau_edge=TAU_EDGE, tau_kp=TAU_KEYPOINT):
        self.tau_edge = tau_edge
        self.tau_kp = tau_kp

    def __call__(self, item):
        d = item.data
        if "hand_mask" not in d or "object_mask" not in d:
            return False, "missing geometry"
        r = interaction_gate(d["hand_mask"], d.get("keypoints", []), d["object_mask"], self.tau_edge, self.tau_kp)
        return r.passed, r.reason


def _tag(key, value):
    def f(item):
        return replace(item, data={**item.data, key: value})

    return f


def default_stages(tau_edge=TAU_EDGE, tau_kp=TAU_KEYPOINT):
    """The curation stage list with mocked model stages and queued human review."""
    return [
        StageSpec("video-selection", VideoSelector(), expected_retention=0.018),
        StageSpec("hand-detection", MockHandDetector()),
        StageSpec("hand-mask-review", kind=HUMAN_REVIEW, expected_retention=0.496),
        StageSpec("object-naming", MockObjectNamer()),
        StageSpec("object-grounding", MockGroundedSegmenter()),
        StageSpec("interaction-check", InteractionCheck(tau_edge, tau_kp), transform=_tag("interaction", True)),
        StageSpec("object-mask-review", kind=HUMAN_REVIEW, expected_retention=0.436),
    ]


def edit_review_stage():
    return StageSpec("edit-review", kind=HUMAN_REVIEW, expected_retention=0.378)


# printed per-stage rates; the units differ (videos, samples, sequences, edits)
PRINTED_STAGE_RATES = {
    "video-selection": 0.018,
    "hand-mask-review": 0.496,
    "object-mask-review": 0.436,
    "edit-review": 0.378,
}
PRINTED_STAGE_UNITS = {
    "video-selection": "video",
    "hand-mask-review": "sample",
    "object-mask-review": "sequence",
    "edit-review": "edit",
}
PRINTED_OVERALL_RATE = 0.004

REGISTRY = {
    "video-selection": VideoSelector,
    "hand-detection": MockHandDetector,
    "object-naming": MockObjectNamer,
    "object-grounding": MockGroundedSegmenter,
    "interaction-check": InteractionCheck,
}
