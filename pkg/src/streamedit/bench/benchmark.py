"""Benchmark entries and their assembly from a set of source videos."""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from pathlib import Path

from .tasks import CHANGE_OBJECT_PROMPTS, CONDITIONING, DEFAULT_TEMPLATES, POOL_SIZE, POOL_TASKS, TASKS, render


@dataclass(frozen=True)
class BenchSource:
    source_id: str
    caption: str = ""
    source_object: str = ""
    scene: str = ""
    slots: dict = field(default_factory=dict, compare=False, hash=False)

    def fill(self):
        out = dict(self.slots)
        out.setdefault("caption", self.caption)
        out.setdefault("object", self.source_object)
        return out


@dataclass(frozen=True)
class BenchEntry:
    entry_id: str
    source_id: str
    task: str
    instruction: str
    conditioning_kind: str = None
    variant: str = None

    def __post_init__(self):
        if self.task not in TASKS:
            raise ValueError(f"unknown task {self.task!r}")


def expected_count(n_sources, pool_size=POOL_SIZE):
    """Closed-form benchmark size: 12 one-prompt tasks, 4 prompts for ChangeObject, two pool tasks."""
    pool = min(pool_size, n_sources)
    return (len(TASKS) - 3) * n_sources + CHANGE_OBJECT_PROMPTS * n_sources + 2 * pool


def _as_source(s):
    return s if isinstance(s, BenchSource) else BenchSource(str(s))


def build_benchmark(sources, templates=None, add_sources=None, remove_sources=None, pool_size=POOL_SIZE):
    """Pair every source with one prompt per task (four for ChangeObject).

    AddObject and RemoveObject draw ``pool_size`` videos from their own pools;
    without explicit pools the first ``min(pool_size, n)`` sources are used.
    """
    templates = dict(DEFAULT_TEMPLATES if templates is None else templates)
    sources = [_as_source(s) for s in sources]
    needed = [t for t in TASKS if t != "ChangeObject"] + ["ChangeObject", "ChangeObjectEffect"]
    missing = [t for t in needed if t not in templates]
    if missing and sources:
        raise KeyError(f"no instruction template for: {', '.join(missing)}")
    pools = {
        "AddObject": [_as_source(s) for s in add_sources] if add_sources is not None else sources[:pool_size],
        "RemoveObject": [_as_source(s) for s in remove_sources] if remove_sources is not None else sources[:pool_size],
    }
    entries = []

    def add(src, task, template_key, variant=None):
        n = len(entries)
        entries.append(BenchEntry(f"{n:05d}", src.source_id, task, render(templates[template_key], src.fill()),
                                  CONDITIONING.get(task), variant))

    for task in TASKS:
        if task in POOL_TASKS:
            for src in pools[task][:pool_size]:
                add(src, task, task)
        elif task == "ChangeObject":
            for src in sources:
                for i in range(CHANGE_OBJECT_PROMPTS):
                    if i < CHANGE_OBJECT_PROMPTS // 2:
                        add(src, task, "ChangeObject", f"replace-{i}")
                    else:
                        add(src, task, "ChangeObjectEffect", f"replace-effect-{i - CHANGE_OBJECT_PROMPTS // 2}")
        else:
            for src in sources:
                add(src, task, task)
    return entries


def save_manifest(path, entries):
    with open(path, "w") as fh:
        for e in entries:
            fh.write(json.dumps(asdict(e)) + "\n")


def load_manifest(path):
    out = []
    for line in Path(path).read_text().splitlines():
        if line.strip():
            out.append(BenchEntry(**json.loads(line)))
    return out


def load_sources(path):
    """Source list as JSONL: ``{"source_id", "caption", "source_object", "scene", ...}``."""
    out = []
    for line in Path(path).read_text().splitlines():
        if not line.strip():
            continue
        d = json.loads(line)
        known = {k: d.pop(k) for k in ("source_id", "caption", "source_object", "scene") if k in d}
        out.append(BenchSource(str(known.pop("source_id")), slots=d, **known))
    return out
