"""Task labels and instruction templates of the 15-task egocentric editing benchmark."""
from __future__ import annotations

import numpy as np

# Column order of the per-task score tables.
TASKS = (
    "AddObject",
    "ChangeCameraPose",
    "ChangeObject",
    "ChangeBackground",
    "Combined",
    "DepthToVideo",
    "AddEffect",
    "VideoToPose",
    "PoseToVideo",
    "Reasoning",
    "RemoveObject",
    "SketchToVideo",
    "Stylization",
    "VideoToDepth",
    "VideoToSketch",
)

DISPLAY_NAMES = {
    "AddObject": "Add Object",
    "ChangeCameraPose": "Change Camera Pose",
    "ChangeObject": "Change Object",
    "ChangeBackground": "Change Background",
    "Combined": "Combined (Multi-Task)",
    "DepthToVideo": "Depth-to-Video",
    "AddEffect": "Add Effect",
    "VideoToPose": "Video-to-Pose",
    "PoseToVideo": "Pose-to-Video",
    "Reasoning": "Reasoning",
    "RemoveObject": "Remove Object",
    "SketchToVideo": "Sketch-to-Video",
    "Stylization": "Stylization",
    "VideoToDepth": "Video-to-Depth",
    "VideoToSketch": "Video-to-Sketch",
}

# tasks whose source videos come from the small per-task pool rather than the diverse set
POOL_TASKS = ("AddObject", "RemoveObject")
POOL_SIZE = 50
CHANGE_OBJECT_PROMPTS = 4  # 2 plain replacement + 2 replacement with an effect

CONDITIONING = {"DepthToVideo": "depth", "SketchToVideo": "sketch", "PoseToVideo": "pose"}

# Fixed instruction strings. The others are placeholders filled from source metadata;
# the real prompts come from an external language model and are out of scope.
DEFAULT_TEMPLATES = {
    "VideoToDepth": "Turn the video into a depth map.",
    "VideoToSketch": "Turn the video into a Canny edge map.",
    "VideoToPose": "Turn the video into a DWpose pose map.",
    "DepthToVideo": "Turn the depth map into a video with the following description: {caption}.",
    "SketchToVideo": "Turn the canny edge map into a video with the following description: {caption}.",
    "PoseToVideo": "Turn the DWpose pose map into a video with the following description: {caption}.",
    "AddObject": "Add a {target} to the scene.",
    "RemoveObject": "Remove the {object} from the video.",
    "ChangeObject": "Replace the {object} with a {target}.",
    "ChangeObjectEffect": "Replace the {object} with a {target} that is {effect}.",
    "ChangeBackground": "Change the background of the scene to {background}.",
    "ChangeCameraPose": "Make the camera {camera_move} while keeping the scene the same.",
    "AddEffect": "Apply a {effect_filter} effect to the whole video.",
    "Stylization": "Render the video in the style of {style}.",
    "Reasoning": "Edit the object the hands reach for first so that it becomes {target}.",
    "Combined": "Replace the {object} with a {target} and render the video in the style of {style}.",
}

# slot fillers used when a source does not provide its own
DEFAULT_SLOTS = {
    "caption": "a person working with their hands",
    "object": "cup",
    "target": "glass bottle",
    "effect": "on fire",
    "background": "a snowy forest",
    "camera_move": "pan slowly to the left",
    "effect_filter": "film grain",
    "style": "watercolor painting",
}


def render(template, slots):
    merged = dict(DEFAULT_SLOTS)
    merged.update({k: v for k, v in slots.items() if v})
    return template.format(**merged)


def conditioning_stub(kind, shape=(1, 8, 8)):
    """Labelled placeholder for a depth/sketch/pose signal (the real extractors are out of scope)."""
    if kind not in ("depth", "sketch", "pose"):
        raise ValueError(f"unknown conditioning kind {kind!r}")
    code = {"depth": 1.0, "sketch": 2.0, "pose": 3.0}[kind]
    return {"kind": kind, "signal": np.full(shape, code, dtype=np.float32)}
