"""Checkpoint directory: ``config.txt`` manifest plus one tensor file per parameter."""
from __future__ import annotations

import json
from pathlib import Path

from ..autodiff import load_state, save_state
from .config import ModelConfig
from .model import EditorTransformer

CONFIG_FILE = "config.txt"
META_FILE = "meta.json"
WEIGHTS_DIR = "weights"


def save_checkpoint(directory, model, meta=None):
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    (directory / CONFIG_FILE).write_text(model.config.to_manifest())
    save_state(directory / WEIGHTS_DIR, model.state_dict())
    (directory / META_FILE).write_text(json.dumps(meta or {}, indent=2, sort_keys=True) + "\n")
    return directory


def load_checkpoint(directory):
    """Return ``(model, meta)``; raises if the directory is incomplete or mismatched."""
    directory = Path(directory)
    cfg_path = directory / CONFIG_FILE
    if not cfg_path.is_file():
        raise FileNotFoundError(f"{cfg_path} not found")
    config = ModelConfig.from_manifest(cfg_path.read_text())
    model = EditorTransformer(config)
    model.load_state_dict(load_state(directory / WEIGHTS_DIR), strict=True)
    meta_path = directory / META_FILE
    meta = json.loads(meta_path.read_text()) if meta_path.is_file() else {}
    return model, meta
