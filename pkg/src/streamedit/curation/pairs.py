"""Edit pairs from a clip's version set, and dataset statistics."""
from __future__ import annotations

import itertools
from collections import Counter
from dataclasses import dataclass

import numpy as np

CATEGORIES = ("ChangeObject", "ChangeObjectWithEffect", "AddObject", "RemoveObject")


@dataclass(frozen=True)
class Version:
    """One version of a clip: the original, an object swap, or the object removed."""

    version_id: str
    clip_id: str
    object_name: str = None  # None when the object was removed
    effect: str = None
    original: bool = False

    @property
    def removed(self):
        return self.object_name is None


@dataclass(frozen=True)
class EditPair:
    source_version_id: str
    target_version_id: str
    instruction: str
    category: str
    source_object: str = None
    target_object: str = None

    def __post_init__(self):
        if self.source_version_id == self.target_version_id:
            raise ValueError("source and target must differ")
        if self.category not in CATEGORIES:
            raise ValueError(f"unknown category {self.category!r}")


def pair_category(src, tgt):
    if tgt.removed:
        return "RemoveObject"
    if src.removed:
        return "AddObject"
    return "ChangeObjectWithEffect" if tgt.effect else "ChangeObject"


def describe(src, tgt):
    """Template instruction (stands in for the language-model description step)."""
    cat = pair_category(src, tgt)
    if cat == "RemoveObject":
        return f"Remove the {src.object_name} held in the hands."
    if cat == "AddObject":
        return f"Place a {tgt.object_name} in the hands."
    text = f"Replace the {src.object_name} in the hands with a {tgt.object_name}"
    return text + (f" that is {tgt.effect}." if tgt.effect else ".")


POLICIES = ("all-permutations", "original-as-source", "original-involved", "subsample")


def build_pairs(original, variants, policy="all-permutations", max_pairs=None, seed=0):
    """Ordered (source, target) pairs over the version set ``{original} + variants``.

    all-permutations: every ordered pair of distinct versions, k(k-1) in total.
    original-as-source: original -> each variant.
    original-involved: both directions between the original and each variant.
    subsample: ``max_pairs`` pairs drawn without replacement from all permutations.
    """
    versions = ([original] if original is not None else []) + list(variants)
    if not versions:
        raise ValueError("empty version set")
    clips = {v.clip_id for v in versions}
    if len(clips) != 1:
        raise ValueError(f"versions come from several clips: {sorted(clips)}")
    if len({v.version_id for v in versions}) != len(versions):
        raise ValueError("duplicate version ids")
    if sum(v.removed for v in versions) > 1:
        raise ValueError("at most one object-removed version per clip")
    if policy not in POLICIES:
        raise ValueError(f"unknown policy {policy!r}")
    if policy == "original-as-source":
        ordered = [(original, v) for v in variants]
    elif policy == "original-involved":
        ordered = [p for v in variants for p in ((original, v), (v, original))]
    else:
        ordered = list(itertools.permutations(versions, 2))
        if policy == "subsample":
            if max_pairs is None:
                raise ValueError("subsample policy needs max_pairs")
            if max_pairs < len(ordered):
                keep = np.random.default_rng(seed).choice(len(ordered), max_pairs, replace=False)
                ordered = [ordered[i] for i in sorted(keep)]
    return [EditPair(s.version_id, t.version_id, describe(s, t), pair_category(s, t), s.object_name, t.object_name)
            for s, t in ordered]


@dataclass
class DatasetStats:
    category_counts: dict
    total: int
    prompt_length_mean: float
    prompt_length_histogram: tuple  # (counts, bin_edges) over character lengths
    unique_source_objects: int
    unique_target_objects: int

    def lines(self):
        out = [f"{c}: {self.category_counts[c]}" for c in CATEGORIES]
        out += [f"total pairs: {self.total}", f"mean prompt length: {self.prompt_length_mean:.1f} characters",
                f"unique source objects: {self.unique_source_objects}",
                f"unique target objects: {self.unique_target_objects}"]
        return out


def dataset_stats(pairs, bins=10):
    pairs = list(pairs)
    counts = Counter(p.category for p in pairs)
    lengths = np.array([len(p.instruction) for p in pairs], dtype=float)
    if lengths.size:
        hist = np.histogram(lengths, bins=bins)
        mean = float(lengths.mean())
    else:
        hist = (np.zeros(bins, dtype=int), np.zeros(bins + 1))
        mean = 0.0
    return DatasetStats(
        {c: counts.get(c, 0) for c in CATEGORIES},
        len(pairs),
        mean,
        (hist[0].tolist(), hist[1].tolist()),
        len({p.source_object for p in pairs if p.source_object}),
        len({p.target_object for p in pairs if p.target_object}),
    )
