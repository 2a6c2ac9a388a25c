"""Few-step and autoregressive distillation of the editor."""
from .config import DMD_DEFAULTS, SELF_FORCING_DEFAULTS, DistillConfig
from .dmd import DivergenceError, DMDTrainer, ScorePair, critic_times, dmd_generator_loss, student_sample
from .log import TrainingLog, critic_ratio, read_log
from .rollout import ChunkRecord, chunk_noise, generate_chunk, rollout_generator, self_forcing_rollout

__all__ = [
    "ChunkRecord",
    "DMD_DEFAULTS",
    "DMDTrainer",
    "DistillConfig",
    "DivergenceError",
    "SELF_FORCING_DEFAULTS",
    "ScorePair",
    "TrainingLog",
    "chunk_noise",
    "critic_ratio",
    "critic_times",
    "dmd_generator_loss",
    "generate_chunk",
    "read_log",
    "rollout_generator",
    "self_forcing_rollout",
    "student_sample",
]
