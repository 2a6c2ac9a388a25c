"""Score records, equal-weight aggregation and judge/human agreement."""
from __future__ import annotations

import json
import math
import warnings
from dataclasses import asdict, dataclass
from importlib import resources
from pathlib import Path

import numpy as np

from .tasks import DISPLAY_NAMES, TASKS

METRICS = ("VLM", "PickScore", "TextAlignment", "TemporalConsistency")


@dataclass(frozen=True)
class ScoreRecord:
    entry_id: str
    metric: str
    value: float

    def __post_init__(self):
        if self.metric not in METRICS:
            raise ValueError(f"unknown metric {self.metric!r}")
        if not math.isfinite(self.value):
            raise ValueError("score must be finite")
        if self.metric == "VLM" and not 0.0 <= self.value <= 10.0:
            raise ValueError(f"VLM score {self.value} outside [0, 10]")


@dataclass
class BenchmarkReport:
    per_task: dict  # metric -> {task: mean}
    counts: dict  # metric -> {task: n records}
    overall: dict  # metric -> mean of per-task means
    missing: dict  # metric -> tasks without records

    def grid(self, metric="VLM"):
        """Plain-text row of per-task means followed by the overall."""
        tasks = [t for t in TASKS if t in self.per_task.get(metric, {})]
        head = " | ".join(f"{DISPLAY_NAMES[t]:>10.10}" for t in tasks) + " | Overall"
        row = " | ".join(f"{self.per_task[metric][t]:>10.2f}" for t in tasks) + f" | {self.overall[metric]:.2f}"
        return head + "\n" + row

    def to_dict(self):
        return asdict(self)


class MockJudge:
    """Judge adapter returning pre-recorded scores: ``scores[entry_id][metric]``."""

    def __init__(self, scores):
        self.scores = scores

    def score(self, entry, metric="VLM"):
        return ScoreRecord(entry.entry_id, metric, float(self.scores[entry.entry_id][metric]))


def aggregate(records, entries):
    """Mean per task and metric; the overall is the unweighted mean of the task means."""
    task_of = {e.entry_id: e.task for e in entries}
    sums = {}
    for r in records:
        if r.entry_id not in task_of:
            raise KeyError(f"score for unknown entry {r.entry_id!r}")
        sums.setdefault(r.metric, {}).setdefault(task_of[r.entry_id], []).append(r.value)
    per_task, counts, overall, missing = {}, {}, {}, {}
    present_tasks = {e.task for e in entries}
    for metric, by_task in sums.items():
        per_task[metric] = {t: float(np.mean(by_task[t])) for t in TASKS if t in by_task}
        counts[metric] = {t: len(by_task[t]) for t in per_task[metric]}
        missing[metric] = [t for t in TASKS if t in present_tasks and t not in by_task]
        if missing[metric]:
            warnings.warn(f"{metric}: no records for {', '.join(missing[metric])}; overall uses present tasks")
        overall[metric] = float(np.mean(list(per_task[metric].values())))
    return BenchmarkReport(per_task, counts, overall, missing)


def save_scores(path, records):
    with open(path, "w") as fh:
        for r in records:
            fh.write(json.dumps(asdict(r)) + "\n")


def load_scores(path):
    return [ScoreRecord(**json.loads(l)) for l in Path(path).read_text().splitlines() if l.strip()]


# ---------------------------------------------------------------- agreement


@dataclass
class AgreementResult:
    per_task: dict  # task -> percent
    counts: dict  # task -> (matches, n)
    ties: dict  # task -> tied judge scores (resolved toward A)
    overall: float  # macro average over tasks
    pooled: float

    @property
    def total_ties(self):
        return sum(self.ties.values())


def preference_agreement(scores_a, scores_b, human, tasks=None):
    """Agreement (%) between the judge's argmax preference and a human's A/B choice.

    ``scores_a``/``scores_b`` are per-sample judge scores of the two methods,
    ``human`` holds "A" or "B". Judge ties go to A and are counted.
    """
    a = np.asarray(scores_a, dtype=np.float64)
    b = np.asarray(scores_b, dtype=np.float64)
    human = list(human)
    if not (a.shape == b.shape and len(human) == a.size):
        raise ValueError(f"unpaired inputs: {a.shape}, {b.shape}, {len(human)} preferences")
    if any(h not in ("A", "B") for h in human):
        raise ValueError("human preference must be 'A' or 'B'")
    tasks = ["all"] * a.size if tasks is None else list(tasks)
    if len(tasks) != a.size:
        raise ValueError("one task label per sample expected")
    judge = np.where(a >= b, "A", "B")
    per_task, counts, ties = {}, {}, {}
    for t in dict.fromkeys(tasks):
        idx = [i for i, x in enumerate(tasks) if x == t]
        m = sum(judge[i] == human[i] for i in idx)
        counts[t] = (int(m), len(idx))
        per_task[t] = 100.0 * m / len(idx)
        ties[t] = int(sum(a[i] == b[i] for i in idx))
    overall = float(np.mean(list(per_task.values())))
    pooled = 100.0 * sum(m for m, _ in counts.values()) / a.size
    return AgreementResult(per_task, counts, ties, overall, pooled)


# ---------------------------------------------------------------- fixtures


def _load_json(name, path=None):
    if path is not None:
        return json.loads(Path(path).read_text())
    return json.loads(resources.files("streamedit.data").joinpath(name).read_text())


def load_vlm_table(path=None):
    """Per-task VLM scores of every method: ``{method: {"scores": [...15], "printed_overall": x}}``."""
    return _load_json("table4_vlm.json", path)["methods"]


def load_agreement_table(path=None):
    return _load_json("table3_agreement.json", path)


def fixture_records(method="EgoEdit", table=None):
    """One VLM record per task for ``method`` plus matching entries (a per-task-mean fixture)."""
    table = table or load_vlm_table()
    from .benchmark import BenchEntry

    entries = [BenchEntry(f"{method}-{t}", f"src-{t}", t, "") for t in TASKS]
    records = [ScoreRecord(e.entry_id, "VLM", v) for e, v in zip(entries, table[method]["scores"])]
    return records, entries


def expand_agreement_rows(rows, baseline, n=30):
    """Per-sample judge scores and human choices consistent with printed per-task counts.

    Each row gives, against ``baseline``: samples where the judge prefers ours,
    samples where the human prefers ours, and the agreement percentage.
    Matches = round(pct * n / 100); the split follows from
    ``both_ours = (matches - n + judge_ours + human_ours) / 2``.
    Ours is method A.
    """
    sa, sb, human, tasks = [], [], [], []
    for row in rows:
        v = row["judge_ours"][baseline]
        u = row["human_ours"][baseline]
        m = round(row["agreement"][baseline] * n / 100)
        twice = m - n + v + u
        if twice % 2 or not 0 <= twice // 2 <= min(v, u) or n - v - u + twice // 2 < 0:
            raise ValueError(f"row {row['task']} vs {baseline} is inconsistent")
        both = twice // 2
        kinds = ([("A", "A")] * both + [("A", "B")] * (v - both) + [("B", "A")] * (u - both)
                 + [("B", "B")] * (n - v - u + both))
        for judge, hum in kinds:
            sa.append(8.0 if judge == "A" else 5.0)
            sb.append(5.0 if judge == "A" else 8.0)
            human.append(hum)
            tasks.append(row["task"])
    return sa, sb, human, tasks
