"""Line-delimited JSON training log."""
from __future__ import annotations

import json
from pathlib import Path


class TrainingLog:
    """Keeps records in memory and, when given a path, appends them as JSON lines."""

    def __init__(self, path=None):
        self.path = Path(path) if path is not None else None
        self.records = []
        if self.path is not None:
            self.path.parent.mkdir(parents=True, exist_ok=True)
            self.path.write_text("")

    def write(self, **record):
        self.records.append(record)
        if self.path is not None:
            with open(self.path, "a") as fh:
                fh.write(json.dumps(record, sort_keys=True) + "\n")

    def of_kind(self, kind):
        return [r for r in self.records if r.get("kind") == kind]


def read_log(path):
    with open(path) as fh:
        return [json.loads(line) for line in fh if line.strip()]


def critic_ratio(records):
    """Critic updates per generator update, as observed in a log."""
    n_gen = sum(1 for r in records if r.get("kind") == "generator")
    n_critic = sum(1 for r in records if r.get("kind") == "critic")
    if n_gen == 0:
        raise ValueError("log holds no generator updates")
    return n_critic / n_gen
