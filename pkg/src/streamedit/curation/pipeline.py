"""Staged filtering pipeline with a retention ledger and replayable human review.

Not shaped as a scikit-learn estimator: nothing is fitted, and the output is a
subset of tagged items plus an accounting record rather than a transform of X.
"""
from __future__ import annotations

import json
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

from .ledger import RetentionLedger

log = logging.getLogger(__name__)

AUTOMATIC = "automatic"
HUMAN_REVIEW = "human-review"


@dataclass(frozen=True)
class Item:
    item_id: str
    data: dict = field(default_factory=dict, compare=False, hash=False)
    unit: str = "video"


@dataclass(frozen=True)
class Rejection:
    item_id: str
    stage: str
    reason: str


@dataclass
class StageSpec:
    """One filtering step.

    ``filter(item)`` returns a bool or ``(bool, reason)``; ``transform`` is
    applied to survivors (e.g. to attach masks or names). Human-review stages
    take no filter; their verdicts come from a :class:`DecisionQueue`.
    """

    name: str
    filter: object = None
    kind: str = AUTOMATIC
    expected_retention: float = None
    transform: object = None

    def __post_init__(self):
        if self.kind not in (AUTOMATIC, HUMAN_REVIEW):
            raise ValueError(f"unknown stage kind {self.kind!r}")
        if self.kind == AUTOMATIC and self.filter is None:
            raise ValueError(f"automatic stage {self.name!r} needs a filter")
        if self.expected_retention is not None and not 0 <= self.expected_retention <= 1:
            raise ValueError("expected_retention must lie in [0, 1]")


class DecisionQueue:
    """Recorded human verdicts, keyed by (stage, item id). Items without a verdict are held back."""

    def __init__(self, decisions=None):
        self.decisions = {}
        for (stage, item_id), v in (decisions or {}).items():
            self.add(stage, item_id, v)

    def add(self, stage, item_id, verdict):
        if verdict not in ("accept", "reject"):
            raise ValueError(f"verdict must be accept or reject, got {verdict!r}")
        self.decisions[(stage, str(item_id))] = verdict

    def verdict(self, stage, item_id):
        return self.decisions.get((stage, str(item_id)))

    def save(self, path):
        rows = [{"stage": s, "item_id": i, "verdict": v} for (s, i), v in sorted(self.decisions.items())]
        Path(path).write_text("\n".join(json.dumps(r) for r in rows) + ("\n" if rows else ""))

    @classmethod
    def load(cls, path):
        q = cls()
        for line in Path(path).read_text().splitlines():
            if line.strip():
                r = json.loads(line)
                q.add(r["stage"], r["item_id"], r["verdict"])
        return q


@dataclass
class PipelineResult:
    survivors: list
    ledger: RetentionLedger
    rejections: list  # one Rejection per filtered item
    errors: list  # (stage, item_id, message)


def _verdict(out):
    if isinstance(out, tuple):
        ok, reason = out
        return bool(ok), str(reason)
    return bool(out), "filtered"


class Pipeline:
    def __init__(self, stages, decisions=None, workers=1):
        stages = list(stages)
        if not stages:
            raise ValueError("a pipeline needs at least one stage")
        names = [s.name for s in stages]
        if len(set(names)) != len(names):
            raise ValueError(f"duplicate stage names: {names}")
        self.stages = stages
        self.decisions = decisions or DecisionQueue()
        self.workers = workers

    def _apply(self, stage, item):
        """Returns ``(kept_item or None, reason, error)`` for a single item."""
        if stage.kind == HUMAN_REVIEW:
            v = self.decisions.verdict(stage.name, item.item_id)
            if v is None:
                return None, "awaiting review", None
            if v == "reject":
                return None, "rejected in review", None
            return item, "", None
        try:
            ok, reason = _verdict(stage.filter(item))
            if ok and stage.transform is not None:
                item = stage.transform(item)
        except Exception as exc:  # noqa: BLE001
            return None, f"error: {exc}", str(exc)
        return (item, "", None) if ok else (None, reason, None)

    def run(self, items, ledger=None):
        ledger = ledger or RetentionLedger()
        current = list(items)
        rejections, errors = [], []
        for stage in self.stages:
            unit = current[0].unit if current else "item"
            if self.workers > 1:
                with ThreadPoolExecutor(self.workers) as pool:
                    results = list(pool.map(lambda it: self._apply(stage, it), current))
            else:
                results = [self._apply(stage, it) for it in current]
            # serial accumulation keeps counts exact whatever the worker count
            kept = []
            for it, (out, reason, err) in zip(current, results):
                if out is None:
                    rejections.append(Rejection(it.item_id, stage.name, reason))
                    if err is not None:
                        errors.append((stage.name, it.item_id, err))
                        log.warning("stage %s failed on %s: %s", stage.name, it.item_id, err)
                else:
                    kept.append(out)
            ledger.record(stage.name, len(current), len(kept), unit)
            current = kept
        return PipelineResult(current, ledger, rejections, errors)


def run_pipeline(items, stages, decisions=None, workers=1):
    """Push ``items`` through ``stages``; returns ``(survivors, ledger)``."""
    res = Pipeline(stages, decisions, workers).run(items)
    return res.survivors, res.ledger


def expand(items, fn, name, ledger, to_unit):
    """One-to-many step (e.g. a clip into its generated edits), recorded as a unit change."""
    out = []
    for it in items:
        out.extend(fn(it))
    ledger.record_unit_change(name, len(items), len(out), items[0].unit if items else "item", to_unit)
    return [replace(o, unit=to_unit) for o in out]
