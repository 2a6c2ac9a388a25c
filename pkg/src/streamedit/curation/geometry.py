"""Hand/object proximity test on pixel-grid geometry."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.ndimage import binary_erosion
from scipy.spatial import cKDTree

# Pixel thresholds. No values are given for these; they are configuration.
TAU_EDGE = 10.0
TAU_KEYPOINT = 20.0


@dataclass(frozen=True)
class GateResult:
    passed: bool
    edge_distance: float
    keypoint_distance: float
    reason: str = ""

    def __bool__(self):
        return self.passed


def as_mask(geom, shape=None):
    """Boolean mask from a mask array or an (N, 2) array of (row, col) pixels."""
    g = np.asarray(geom)
    if g.dtype == bool:
        return g
    if g.ndim == 2 and g.shape[1] == 2 and shape is not None:
        m = np.zeros(shape, dtype=bool)
        if g.size:
            m[g[:, 0].astype(int), g[:, 1].astype(int)] = True
        return m
    return g.astype(bool)


def boundary(mask):
    """Pixels of ``mask`` with at least one 4-neighbour outside it."""
    inner = binary_erosion(mask, structure=np.array([[0, 1, 0], [1, 1, 1], [0, 1, 0]]), border_value=0)
    return np.argwhere(mask & ~inner).astype(np.float64)


def edge_distance(hand, obj):
    """Smallest Euclidean distance between the two mask outlines; 0 if the masks overlap."""
    if (hand & obj).any():
        return 0.0
    d, _ = cKDTree(boundary(obj)).query(boundary(hand))
    return float(d.min())


def keypoint_distance(keypoints, obj):
    """Smallest distance from any hand keypoint (row, col) to an object pixel; 0 if one lies inside."""
    d, _ = cKDTree(np.argwhere(obj).astype(np.float64)).query(np.asarray(keypoints, dtype=np.float64))
    return float(d.min())


def interaction_gate(hand_mask, keypoints, object_mask, tau_edge=TAU_EDGE, tau_kp=TAU_KEYPOINT):
    """Pass iff edge distance <= tau_edge and keypoint distance <= tau_kp (both inclusive).

    Empty geometry fails closed.
    """
    obj = as_mask(object_mask)
    hand = as_mask(hand_mask, obj.shape)
    kp = np.asarray(keypoints, dtype=np.float64).reshape(-1, 2)
    if not obj.any():
        return GateResult(False, np.inf, np.inf, "empty object mask")
    if not hand.any():
        return GateResult(False, np.inf, np.inf, "empty hand mask")
    if kp.shape[0] == 0:
        return GateResult(False, np.inf, np.inf, "no hand keypoints")
    if hand.shape != obj.shape:
        raise ValueError(f"hand mask {hand.shape} and object mask {obj.shape} differ in shape")
    de = edge_distance(hand, obj)
    dk = keypoint_distance(kp, obj)
    if de > tau_edge:
        return GateResult(False, de, dk, f"edge distance {de:.2f} > {tau_edge}")
    if dk > tau_kp:
        return GateResult(False, de, dk, f"keypoint distance {dk:.2f} > {tau_kp}")
    return GateResult(True, de, dk)
