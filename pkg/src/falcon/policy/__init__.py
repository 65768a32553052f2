"""Diffusion action heads and their receding-horizon runner."""

from .diffusion import (CHUNK_CLAMP, DenoiserNet, DiffusionPolicy,
                        cosine_alpha_bar, make_schedule)
from .normalizer import ActionNormalizer
from .runner import (ARM_DIM, BASE_DIM, PolicyRunner, build_condition,
                     cond_dim)

__all__ = [
    "CHUNK_CLAMP", "DenoiserNet", "DiffusionPolicy", "cosine_alpha_bar",
    "make_schedule", "ActionNormalizer", "ARM_DIM", "BASE_DIM",
    "PolicyRunner", "build_condition", "cond_dim",
]
