"""Hyper-parameters shared by the DMD and Self-Forcing phases."""
from __future__ import annotations

from dataclasses import asdict, dataclass

# reference optimiser settings of the full-scale runs
PAPER_LR_GEN = 1e-6
PAPER_LR_CRITIC = 4e-7
PAPER_EMA = 0.99


@dataclass(frozen=True)
class DistillConfig:
    student_steps: int = 4
    teacher_steps: int = 40
    critic_steps_per_gen: int = 5
    lr_gen: float = PAPER_LR_GEN
    lr_critic: float = PAPER_LR_CRITIC
    lr_multiplier: float = 1.0
    ema_decay: float = PAPER_EMA
    n_chunks: int = 7
    chunk_latents: int = 3
    window: int = 5
    mask_first_for_last: bool = True
    generator_steps: int = 100
    batch_size: int = 64
    seed: int = 0

    def __post_init__(self):
        for name in ("student_steps", "teacher_steps", "critic_steps_per_gen", "n_chunks",
                     "chunk_latents", "window", "generator_steps", "batch_size"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be positive")
        for name in ("lr_gen", "lr_critic", "lr_multiplier"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if not 0.0 <= self.ema_decay < 1.0:
            raise ValueError("ema_decay must lie in [0, 1)")
        if self.student_steps > self.teacher_steps:
            raise ValueError("student_steps cannot exceed teacher_steps")

    @property
    def effective_lr_gen(self):
        return self.lr_gen * self.lr_multiplier

    @property
    def effective_lr_critic(self):
        return self.lr_critic * self.lr_multiplier

    def to_dict(self):
        return asdict(self)


DMD_DEFAULTS = DistillConfig(critic_steps_per_gen=5)
SELF_FORCING_DEFAULTS = DistillConfig(critic_steps_per_gen=10)
