"""Rectified-flow machinery: linear path, velocity target, training loss,
logit-normal time sampling, Euler integration and classifier-free guidance.

Convention: ``t = 0`` is pure noise and ``t = 1`` is data, so
``x_t = (1 - t) x0 + t x1`` and the target velocity is ``x1 - x0``.

Velocity models are callables ``model(x, t, cond) -> Tensor`` where ``t`` is a
per-sample array broadcast against the batch dimension.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .autodiff import Tensor


def _broadcast_t(t, like):
    """Reshape a scalar or per-sample ``t`` so it broadcasts against ``like``."""
    t = np.asarray(t, dtype=np.float64)
    ndim = like.ndim
    if t.ndim == 0:
        return t
    return t.reshape(t.shape + (1,) * (ndim - t.ndim))


def interpolate(x0, x1, t):
    """Point on the straight path from ``x0`` (noise) to ``x1`` (data)."""
    x0_shape = np.shape(x0.data if isinstance(x0, Tensor) else x0)
    x1_shape = np.shape(x1.data if isinstance(x1, Tensor) else x1)
    if x0_shape != x1_shape:
        raise ValueError(f"interpolate: x0 shape {x0_shape} differs from x1 shape {x1_shape}")
    t_arr = np.asarray(t, dtype=np.float64)
    if np.any(t_arr < 0) or np.any(t_arr > 1):
        raise ValueError("t must lie in [0, 1]")
    ref = x0.data if isinstance(x0, Tensor) else np.asarray(x0)
    tb = _broadcast_t(t_arr, ref)
    if isinstance(x0, Tensor) or isinstance(x1, Tensor):
        dtype = (x0 if isinstance(x0, Tensor) else x1).dtype
        tb = np.asarray(tb, dtype=dtype)
        return x0 * (1.0 - tb) + x1 * tb
    dtype = np.result_type(ref, np.asarray(x1))
    tb = np.asarray(tb, dtype=dtype)
    return (1.0 - tb) * ref + tb * np.asarray(x1)


def velocity_target(x0, x1):
    return x1 - x0


@dataclass(frozen=True)
class FlowSample:
    x0: np.ndarray
    x1: np.ndarray
    t: np.ndarray
    xt: np.ndarray
    v_target: np.ndarray


def make_flow_sample(x1, rng, sampler=None):
    """Draw noise and time for a data batch and build the training tuple."""
    x1 = np.asarray(x1)
    sampler = sampler or LogitNormalTimeSampler()
    x0 = rng.standard_normal(x1.shape).astype(x1.dtype)
    t = sampler.sample(rng, size=x1.shape[0])
    return FlowSample(x0, x1, t, interpolate(x0, x1, t), velocity_target(x0, x1))


@dataclass(frozen=True)
class LogitNormalTimeSampler:
    """``t = sigmoid(z)`` with ``z ~ Normal(mean, std**2)``."""

    mean: float = 0.0
    std: float = 1.0

    def __post_init__(self):
        if self.std <= 0:
            raise ValueError("std must be positive")

    def sample(self, rng, size=None):
        z = rng.normal(self.mean, self.std, size=size)
        t = 1.0 / (1.0 + np.exp(-z))
        # keep strictly inside (0, 1) even when the sigmoid saturates in float64
        tiny = np.finfo(np.float64).eps
        return np.clip(t, tiny, 1.0 - tiny)


def sample_time(sampler, rng, size=None):
    return sampler.sample(rng, size=size)


def rf_loss(model, x1, condition=None, rng=None, sampler=None, x0=None, t=None, reduction="sum"):
    """Rectified-flow regression loss ``E || model(x_t, t) - (x1 - x0) ||^2``.

    ``x0`` and ``t`` are drawn from ``rng`` unless given. With
    ``reduction="sum"`` the squared error is summed per sample and averaged
    over the batch; ``"mean"`` averages over every element instead.
    """
    x1 = x1.data if isinstance(x1, Tensor) else np.asarray(x1)
    batch = x1.shape[0]
    if x0 is None:
        x0 = rng.standard_normal(x1.shape).astype(x1.dtype)
    if t is None:
        t = (sampler or LogitNormalTimeSampler()).sample(rng, size=batch)
    t = np.broadcast_to(np.asarray(t, dtype=np.float64), (batch,))
    xt = interpolate(x0, x1, t).astype(x1.dtype)
    target = velocity_target(x0, x1)
    pred = model(Tensor(xt), t, condition)
    if pred.shape != x1.shape:
        raise ValueError(f"model output shape {pred.shape} does not match data shape {x1.shape}")
    diff = pred - Tensor(target.astype(pred.dtype))
    sq = diff * diff
    if reduction == "mean":
        return sq.mean()
    if reduction != "sum":
        raise ValueError(f"unknown reduction {reduction!r}")
    return sq.sum() * (1.0 / batch)


def uniform_schedule(steps):
    return np.linspace(0.0, 1.0, steps + 1)


@dataclass(frozen=True)
class SamplerConfig:
    """Euler integration settings; the schedule defaults to a uniform grid."""

    steps: int = 40
    guidance_scale: float = 1.0
    schedule: tuple = field(default=None)

    def __post_init__(self):
        if self.steps < 1:
            raise ValueError("steps must be a positive integer")
        if self.guidance_scale < 0:
            raise ValueError("guidance_scale must be non-negative")
        sched = uniform_schedule(self.steps) if self.schedule is None else np.asarray(self.schedule, dtype=np.float64)
        if len(sched) != self.steps + 1:
            raise ValueError(f"schedule needs {self.steps + 1} points, got {len(sched)}")
        if sched[0] != 0.0 or sched[-1] != 1.0 or np.any(np.diff(sched) <= 0):
            raise ValueError("schedule must increase strictly from 0 to 1")
        object.__setattr__(self, "schedule", tuple(float(s) for s in sched))

    @property
    def guided(self):
        return self.guidance_scale != 1.0

    @property
    def nfe(self):
        return self.steps * (2 if self.guided else 1)


TEACHER_CONFIG = SamplerConfig(steps=40, guidance_scale=5.0)


def cfg_velocity(v_cond, v_uncond, scale):
    """Classifier-free guidance: ``v_uncond + scale * (v_cond - v_uncond)``."""
    sc = v_cond.shape
    su = v_uncond.shape
    if sc != su:
        raise ValueError(f"cfg_velocity: shapes {sc} and {su} differ")
    return v_uncond + (v_cond - v_uncond) * scale


def guided_velocity(model, x, t, condition, null_condition, scale):
    """One guided evaluation (two model calls unless ``scale == 1``)."""
    v_cond = model(x, t, condition)
    if scale == 1.0:
        return v_cond
    v_uncond = model(x, t, null_condition)
    return cfg_velocity(v_cond, v_uncond, scale)


def euler_sample(model, x0, config, condition=None, null_condition=None):
    """Integrate ``dx/dt = v(x, t)`` over ``config.schedule`` starting at ``x0``.

    Works on plain arrays or on Tensors (the rollout stays differentiable when
    the model output carries a graph).
    """
    x = x0
    batch = np.shape(x0.data if isinstance(x0, Tensor) else x0)[0]
    sched = config.schedule
    for k in range(config.steps):
        t = np.full(batch, sched[k])
        xin = x if isinstance(x, Tensor) else Tensor(np.asarray(x))
        v = guided_velocity(model, xin, t, condition, null_condition, config.guidance_scale)
        dt = sched[k + 1] - sched[k]
        if isinstance(x, Tensor) or v.requires_grad:
            x = xin + v * dt
        else:
            x = xin.data + v.data * np.asarray(dt, dtype=v.dtype)
    return x


class NFECounter:
    """Transparent wrapper counting model invocations."""

    def __init__(self, model):
        self.model = model
        self.count = 0

    def __call__(self, *args, **kwargs):
        self.count += 1
        return self.model(*args, **kwargs)

    def reset(self):
        self.count = 0

    def __getattr__(self, name):
        return getattr(self.model, name)


def logit(t):
    t = np.asarray(t, dtype=np.float64)
    return np.log(t) - np.log1p(-t)


__all__ = [
    "FlowSample",
    "LogitNormalTimeSampler",
    "NFECounter",
    "SamplerConfig",
    "TEACHER_CONFIG",
    "cfg_velocity",
    "euler_sample",
    "guided_velocity",
    "interpolate",
    "logit",
    "make_flow_sample",
    "rf_loss",
    "sample_time",
    "uniform_schedule",
    "velocity_target",
]
