"""Central finite-difference checks for reverse-mode gradients."""
from __future__ import annotations

import numpy as np

from .tensor import Tensor


def numerical_grad(fn, tensors, eps=1e-5, indices=None):
    """Central differences of scalar ``fn()`` w.r.t. each tensor's data (perturbed in place).

    ``indices`` optionally restricts, per tensor, which flat entries are probed;
    the others are left at zero.
    """
    grads = []
    for n, t in enumerate(tensors):
        g = np.zeros_like(t.data, dtype=np.float64)
        flat = t.data.reshape(-1)
        gflat = g.reshape(-1)
        probe = range(flat.size) if indices is None else indices[n]
        for i in probe:
            orig = flat[i]
            flat[i] = orig + eps
            up = float(fn().data)
            flat[i] = orig - eps
            down = float(fn().data)
            flat[i] = orig
            gflat[i] = (up - down) / (2 * eps)
        grads.append(g)
    return grads


def relative_error(analytic, numeric):
    """Max abs deviation scaled by the larger of the two gradients' max magnitudes."""
    analytic = np.asarray(analytic, dtype=np.float64)
    numeric = np.asarray(numeric, dtype=np.float64)
    scale = max(np.abs(analytic).max(initial=0.0), np.abs(numeric).max(initial=0.0))
    diff = np.abs(analytic - numeric).max(initial=0.0)
    if scale == 0.0:
        return diff
    return diff / scale


def gradcheck(fn, tensors, eps=1e-5, max_entries=None, rng=None):
    """Compare ``backward`` against central differences.

    ``fn`` takes no arguments and returns a scalar Tensor built from
    ``tensors``; all tensors should be float64 for the comparison to be
    meaningful. With ``max_entries`` only that many randomly chosen entries per
    tensor are probed. Returns the worst relative error over all tensors.
    """
    for t in tensors:
        if t.dtype != np.float64:
            raise TypeError("gradcheck expects float64 tensors")
        t.grad = None
    loss = fn()
    loss.backward()
    analytic = [t.grad.copy() if t.grad is not None else np.zeros_like(t.data) for t in tensors]
    indices = None
    if max_entries is not None:
        rng = rng if rng is not None else np.random.default_rng(0)
        indices = [
            np.arange(t.size) if t.size <= max_entries else rng.choice(t.size, max_entries, replace=False)
            for t in tensors
        ]
        analytic = [a.reshape(-1)[idx] for a, idx in zip(analytic, indices)]
    numeric = numerical_grad(fn, tensors, eps=eps, indices=indices)
    if indices is not None:
        numeric = [g.reshape(-1)[idx] for g, idx in zip(numeric, indices)]
    return max(relative_error(a, n) for a, n in zip(analytic, numeric))


def random_projection_loss(output_fn, rng):
    """Wrap a tensor-valued function into a scalar via a fixed random projection."""
    weights = {}

    def loss():
        out = output_fn()
        if "w" not in weights:
            weights["w"] = rng.standard_normal(out.shape)
        return (out * Tensor(weights["w"].astype(out.dtype))).sum()

    return loss
