"""Distribution-matching distillation in its minimal score-difference form.

The generator is pushed along ``x1_fake(x_t) - x1_real(x_t)`` evaluated at
re-noised student samples, where both denoised estimates come from velocity
models (``x1 = x_t + (1 - t) v``). The real model is the frozen teacher; the
fake critic is regressed onto the student's own samples.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..autodiff import EMA, Adam, Tensor, no_grad
from ..flow import NFECounter, SamplerConfig, euler_sample, guided_velocity, interpolate, rf_loss
from .log import TrainingLog


class DivergenceError(RuntimeError):
    """Raised when a loss turns non-finite; carries the offending record."""

    def __init__(self, message, record):
        super().__init__(f"{message}: {record}")
        self.record = record


def student_sample(student, x0, condition=None, steps=4):
    """Few-step Euler sampling without a guidance branch (exactly ``steps`` calls)."""
    return euler_sample(student, x0, SamplerConfig(steps=steps), condition)


def critic_times(steps, size, rng):
    """Noise levels for critic and generator losses: uniform over the interior
    points of the student's grid (pure noise and clean data carry no score gap
    information). A one-step student falls back to ``t = 0.5``."""
    grid = np.asarray(SamplerConfig(steps=steps).schedule[1:-1])
    if grid.size == 0:
        grid = np.array([0.5])
    return grid[rng.integers(0, len(grid), size=size)]


@dataclass
class ScorePair:
    """Frozen real-score model (the teacher) and trainable fake-score critic."""

    real: object
    fake: object
    guidance_scale: float = 1.0
    null_condition: object = None  # callable cond -> null cond, used when guided

    def _null(self, cond):
        return self.null_condition(cond) if callable(self.null_condition) else self.null_condition

    def real_x1(self, xt, t, cond):
        v = guided_velocity(self.real, xt, t, cond, self._null(cond), self.guidance_scale)
        return _x1(xt, t, v)

    def fake_x1(self, xt, t, cond):
        return _x1(xt, t, self.fake(xt, t, cond))


def _x1(xt, t, v):
    data = xt.data if isinstance(xt, Tensor) else xt
    tb = np.asarray(t, dtype=data.dtype).reshape((-1,) + (1,) * (data.ndim - 1))
    return data + (1.0 - tb) * v.data


def dmd_generator_loss(x, pair, cond, rng, steps, t=None, noise=None):
    """Surrogate loss whose gradient w.r.t. ``x`` is the normalised score gap.

    ``0.5 * || x - stopgrad(x - w * (x1_fake - x1_real)) ||^2`` averaged over
    the batch, with ``w = 1 / mean|x - x1_real|``.
    """
    xd = x.data
    batch = xd.shape[0]
    t = critic_times(steps, batch, rng) if t is None else np.asarray(t)
    noise = rng.standard_normal(xd.shape).astype(xd.dtype) if noise is None else noise
    with no_grad():
        xt = Tensor(interpolate(noise, xd, t).astype(xd.dtype))
        real = pair.real_x1(xt, t, cond)
        fake = pair.fake_x1(xt, t, cond)
    gap = fake - real
    scale = np.abs(xd - real).mean()
    w = 1.0 / scale if scale > 0 else 1.0
    target = Tensor((xd - w * gap).astype(xd.dtype))
    diff = x - target
    loss = (diff * diff).sum() * (0.5 / batch)
    return loss, float(np.sqrt((gap ** 2).mean()))


class DMDTrainer:
    """Alternates ``config.critic_steps_per_gen`` critic updates with one generator update.

    ``generate(student, noise, cond) -> (Tensor, nfe)`` produces
    differentiable student samples (plain few-step sampling, or a causal
    rollout) and reports the model calls spent per sample;
    ``sample_batch(rng) -> (noise, cond)`` supplies generator inputs.
    """

    def __init__(self, student, pair, config, generate=None, sample_batch=None, log=None):
        self.student = student
        self.pair = pair
        self.config = config
        self.generate = generate or self._plain_generate
        self.sample_batch = sample_batch
        self.log = log if log is not None else TrainingLog()
        self.rng = np.random.default_rng(config.seed)
        self.gen_opt = Adam(student.parameters(), lr=config.effective_lr_gen)
        self.critic_opt = Adam(pair.fake.parameters(), lr=config.effective_lr_critic)
        self.ema = EMA(student, config.ema_decay)
        self.step_count = 0

    def _plain_generate(self, student, noise, cond):
        counter = NFECounter(student)
        x = student_sample(counter, Tensor(noise), cond, self.config.student_steps)
        return x, counter.count

    def _check(self, value, record):
        if not np.isfinite(value):
            self.log.write(**record, kind="diverged")
            raise DivergenceError("non-finite loss", record)

    def critic_update(self, samples, cond):
        self.critic_opt.zero_grad()
        t = critic_times(self.config.student_steps, samples.shape[0], self.rng)
        loss = rf_loss(self.pair.fake, samples, cond, self.rng, t=t)
        value = float(loss.data)
        self._check(value, {"step": self.step_count, "phase": "critic", "loss": value})
        loss.backward()
        self.critic_opt.step()
        return value

    def step(self):
        noise, cond = self.sample_batch(self.rng)
        x, nfe = self.generate(self.student, noise, cond)
        samples = x.data.copy()
        critic_losses = []
        for _ in range(self.config.critic_steps_per_gen):
            critic_losses.append(self.critic_update(samples, cond))
            self.log.write(kind="critic", step=self.step_count, loss=critic_losses[-1])
        self.gen_opt.zero_grad()
        loss, gap = dmd_generator_loss(x, self.pair, cond, self.rng, self.config.student_steps)
        value = float(loss.data)
        self._check(value, {"step": self.step_count, "phase": "generator", "loss": value, "gap": gap})
        loss.backward()
        self.gen_opt.step()
        self.ema.update(self.student)
        self.log.write(kind="generator", step=self.step_count, loss=value, score_gap=gap,
                       critic_steps=len(critic_losses), nfe=nfe)
        self.step_count += 1
        return value

    def fit(self, n_steps=None):
        for _ in range(n_steps or self.config.generator_steps):
            self.step()
        return self
