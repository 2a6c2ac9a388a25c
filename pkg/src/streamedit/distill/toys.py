"""Small problems on which the distillation phases can be trained and checked quickly."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..autodiff import Adam, Tensor, no_grad
from ..editor import EditorTransformer, ModelConfig
from ..flow import SamplerConfig, euler_sample, rf_loss
from ..toyflow import ToyFlowModel
from .config import DistillConfig
from .dmd import DMDTrainer, ScorePair
from .rollout import rollout_generator, self_forcing_rollout


# Toy settings. The reference learning rates are scaled up (the toys train for
# hundreds of steps, not thousands) and batches are smaller; everything else
# keeps the reference values.
TOY_MIXTURE_DMD = DistillConfig(critic_steps_per_gen=5, lr_multiplier=300, batch_size=256, generator_steps=600)
TOY_EDITOR_DMD = DistillConfig(critic_steps_per_gen=5, lr_multiplier=300, batch_size=16, generator_steps=60)
TOY_EDITOR_SF = DistillConfig(critic_steps_per_gen=10, lr_multiplier=300, batch_size=16, generator_steps=240)


# ---------------------------------------------------------------- 1-D mixture


@dataclass(frozen=True)
class Mixture1D:
    modes: tuple = (1.5, 4.5)
    std: float = 0.5
    weights: tuple = (0.5, 0.5)

    def sample(self, n, rng):
        idx = rng.choice(len(self.modes), size=n, p=np.asarray(self.weights) / np.sum(self.weights))
        return (np.asarray(self.modes)[idx] + self.std * rng.standard_normal(n))[:, None]

    @property
    def mean(self):
        w = np.asarray(self.weights) / np.sum(self.weights)
        return float(w @ np.asarray(self.modes))

    @property
    def var(self):
        w = np.asarray(self.weights) / np.sum(self.weights)
        m = np.asarray(self.modes)
        return float(w @ (m ** 2) + self.std ** 2 - self.mean ** 2)


def train_mixture_teacher(mixture=Mixture1D(), n_samples=20_000, n_iter=3000, seed=0):
    X = mixture.sample(n_samples, np.random.default_rng(seed))
    return ToyFlowModel(hidden=64, n_iter=n_iter, random_state=seed).fit(X).velocity_model_


def sample_vector_model(model, steps, n, seed, dim=1):
    z = np.random.default_rng(seed).standard_normal((n, dim)).astype(np.float32)
    with no_grad():
        return euler_sample(model, z, SamplerConfig(steps=steps))


def distill_mixture(teacher, config, log=None):
    """DMD from the many-step teacher into a ``config.student_steps`` student (both start as teacher copies)."""
    student, critic = teacher.clone(), teacher.clone()
    B = config.batch_size

    def batch(rng):
        return rng.standard_normal((B, 1)).astype(np.float32), None

    trainer = DMDTrainer(student, ScorePair(teacher, critic), config, sample_batch=batch, log=log)
    return trainer.fit()


# ---------------------------------------------------------------- chunked AR editing process


TOY_EDITOR_CONFIG = ModelConfig(blocks=2, hidden=32, heads=2, patch=2, latent_channels=1, latent_height=2,
                                latent_width=2, text_dim=8, chunk_latents=3, window_chunks=5, freq_dim=16,
                                max_text_tokens=4)
TOY_INSTRUCTION = "brighten the scene"


@dataclass(frozen=True)
class ChunkedARProcess:
    """Source: stationary AR(1) latents. Target: source plus a per-chunk drift plus AR(1) residual."""

    n_chunks: int = 7
    chunk_latents: int = 3
    frame_shape: tuple = (1, 2, 2)
    rho_src: float = 0.8
    rho_edit: float = 0.9
    edit_std: float = 0.5
    drift_start: float = 0.5
    drift_step: float = 0.25

    @property
    def n_frames(self):
        return self.n_chunks * self.chunk_latents

    def drift(self):
        k = np.arange(self.n_frames) // self.chunk_latents
        return self.drift_start + self.drift_step * k

    def _ar(self, n, rho, std, rng):
        out = np.empty((n, self.n_frames) + self.frame_shape)
        out[:, 0] = std * rng.standard_normal((n,) + self.frame_shape)
        innov = std * np.sqrt(1 - rho ** 2)
        for f in range(1, self.n_frames):
            out[:, f] = rho * out[:, f - 1] + innov * rng.standard_normal((n,) + self.frame_shape)
        return out

    def sample(self, n, rng):
        src = self._ar(n, self.rho_src, 1.0, rng)
        resid = self._ar(n, self.rho_edit, self.edit_std, rng)
        tgt = src + self.drift()[None, :, None, None, None] + resid
        return src.astype(np.float32), tgt.astype(np.float32)


def train_editor_teacher(process=ChunkedARProcess(), config=TOY_EDITOR_CONFIG, n_iter=1500, batch_size=64,
                         learning_rate=2e-3, seed=0, log=None):
    """Bidirectional editor trained with the rectified-flow loss on (source, target) pairs."""
    rng = np.random.default_rng(seed)
    model = EditorTransformer(config, rng=np.random.default_rng(seed + 1))
    opt = Adam(model.parameters(), lr=learning_rate)
    for it in range(n_iter):
        opt.lr = learning_rate * (0.05 + 0.95 * 0.5 * (1 + np.cos(np.pi * it / n_iter)))
        src, tgt = process.sample(batch_size, rng)
        cond = model.condition(src, TOY_INSTRUCTION)
        opt.zero_grad()
        loss = rf_loss(model, tgt, cond, rng, reduction="mean")
        loss.backward()
        opt.step()
        if log is not None:
            log.write(kind="teacher", step=it, loss=float(loss.data))
    return model


def editor_batch_sampler(process, model, batch_size):
    def batch(rng):
        src, _ = process.sample(batch_size, rng)
        noise = rng.standard_normal(src.shape).astype(np.float32)
        return noise, model.condition(src, TOY_INSTRUCTION)

    return batch


def distill_editor_dmd(teacher, process, config, log=None):
    """Phase 1: few-step bidirectional student via DMD."""
    student, critic = teacher.clone(), teacher.clone()
    trainer = DMDTrainer(student, ScorePair(teacher, critic), config,
                         sample_batch=editor_batch_sampler(process, student, config.batch_size), log=log)
    return trainer.fit()


def distill_editor_self_forcing(init_student, teacher, process, config, log=None):
    """Phase 2: causal student trained on its own chunk-by-chunk rollouts (starts from the DMD student)."""
    student, critic = init_student.clone(), teacher.clone()
    generate = rollout_generator(config.n_chunks, config.student_steps, config.mask_first_for_last)
    trainer = DMDTrainer(student, ScorePair(teacher, critic), config, generate=generate,
                         sample_batch=editor_batch_sampler(process, student, config.batch_size), log=log)
    return trainer.fit()


def sample_editor_teacher(teacher, src, steps=40, seed=0):
    cond = teacher.condition(src, TOY_INSTRUCTION)
    z = np.random.default_rng(seed).standard_normal(src.shape).astype(np.float32)
    with no_grad():
        return euler_sample(teacher, z, SamplerConfig(steps=steps), cond)


def sample_editor_causal(student, src, config, seed=0):
    cond = student.condition(src, TOY_INSTRUCTION)
    with no_grad():
        video, _ = self_forcing_rollout(student, cond, config.n_chunks, config.student_steps, seed=seed,
                                        mask_first_for_last=config.mask_first_for_last)
    return video


def per_chunk_moments(videos, chunk_latents):
    """Mean and standard deviation of every chunk's values, pooled over samples."""
    n_chunks = videos.shape[1] // chunk_latents
    flat = videos.reshape(videos.shape[0], n_chunks, -1)
    return flat.mean(axis=(0, 2)), flat.std(axis=(0, 2))
