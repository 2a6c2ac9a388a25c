"""Seeded synthetic clips, review decisions and pair fixtures for demos and tests."""
from __future__ import annotations

import json
from importlib import resources

import numpy as np

from .adapters import ALLOWED_CAMERAS
from .pairs import EditPair
from .pipeline import DecisionQueue, Item

OBJECTS = ("cup", "knife", "phone", "screwdriver", "sponge", "book", "pan", "brush")


def _disk(shape, center, radius):
    r, c = np.ogrid[:shape[0], :shape[1]]
    return (r - center[0]) ** 2 + (c - center[1]) ** 2 <= radius ** 2


def synthetic_items(n, seed=0, grid=(48, 48)):
    """Clips with camera metadata, detector scores and hand/object geometry."""
    rng = np.random.default_rng(seed)
    cameras = list(ALLOWED_CAMERAS) + ["Vuzix Blade", "Pupil Invisible"]
    items = []
    for i in range(n):
        hand_c = rng.integers(10, grid[0] - 10, 2)
        gap = rng.uniform(0, 25)
        ang = rng.uniform(0, 2 * np.pi)
        obj_c = np.clip(hand_c + (8 + gap) * np.array([np.cos(ang), np.sin(ang)]), 4, grid[0] - 5).astype(int)
        hand = _disk(grid, hand_c, 6)
        obj = _disk(grid, obj_c, 4)
        kp = np.argwhere(hand)[rng.choice(hand.sum(), 5, replace=False)]
        data = {
            "camera": cameras[rng.integers(len(cameras))],
            "monocular": bool(rng.random() < 0.9),
            "quality": float(rng.random()),
            "hand_scores": rng.uniform(0.3, 1.0, 4).round(3).tolist(),
            "object_name": OBJECTS[rng.integers(len(OBJECTS))] if rng.random() < 0.8 else None,
            "mask_scores": rng.uniform(0.1, 0.9, 4).round(3).tolist(),
            "text_scores": rng.uniform(0.1, 0.9, 4).round(3).tolist(),
            "hand_mask": hand,
            "object_mask": obj,
            "keypoints": kp.tolist(),
        }
        items.append(Item(f"clip{i:05d}", data))
    return items


def synthetic_decisions(items, stages, accept_rate=0.5, seed=0):
    """Pre-recorded review verdicts for every item at every named review stage."""
    rng = np.random.default_rng(seed)
    q = DecisionQueue()
    for stage in stages:
        for it in items:
            q.add(stage, it.item_id, "accept" if rng.random() < accept_rate else "reject")
    return q


def load_category_fixture():
    return json.loads(resources.files("streamedit.data").joinpath("dataset_categories.json").read_text())


def category_fixture_pairs(counts=None):
    """Lightweight pairs whose category counts match ``counts`` (default: the dataset fixture)."""
    counts = counts or load_category_fixture()["category_counts"]
    pairs = []
    for cat, n in counts.items():
        for i in range(n):
            pairs.append(EditPair(f"{cat}-{i}-s", f"{cat}-{i}-t", "", cat))
    return pairs
