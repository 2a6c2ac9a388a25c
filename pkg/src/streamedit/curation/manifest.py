"""Pipeline and item manifests (JSON / JSON lines)."""
from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .adapters import REGISTRY
from .pipeline import HUMAN_REVIEW, Item, StageSpec


def load_pipeline_manifest(path):
    """``{"stages": [{"name", "kind", "adapter", "params", "expected_retention"}]}`` -> stage list."""
    spec = json.loads(Path(path).read_text())
    stages = []
    for s in spec["stages"]:
        kind = s.get("kind", "automatic")
        if kind == HUMAN_REVIEW:
            stages.append(StageSpec(s["name"], kind=kind, expected_retention=s.get("expected_retention")))
            continue
        adapter = s.get("adapter", s["name"])
        if adapter not in REGISTRY:
            raise KeyError(f"unknown adapter {adapter!r}; known: {sorted(REGISTRY)}")
        stages.append(StageSpec(s["name"], REGISTRY[adapter](**s.get("params", {})), kind,
                                s.get("expected_retention")))
    return stages


def load_items(path):
    items = []
    for line in Path(path).read_text().splitlines():
        if not line.strip():
            continue
        d = json.loads(line)
        data = d.get("data", {})
        for key in ("hand_mask", "object_mask"):
            if key in data:
                data[key] = np.asarray(data[key], dtype=bool)
        items.append(Item(str(d["item_id"]), data, d.get("unit", "video")))
    return items


def save_items(path, items):
    def enc(v):
        return v.tolist() if isinstance(v, np.ndarray) else v

    with open(path, "w") as fh:
        for it in items:
            fh.write(json.dumps({"item_id": it.item_id, "unit": it.unit,
                                 "data": {k: enc(v) for k, v in it.data.items()}}) + "\n")
