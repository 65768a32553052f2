"""Shared vision-language coordinator: encoders, phase head and latent."""

from .core import Coordinator, FrameEncoding, assemble_z, latent_dim, z_slices
from .encoders import (FusionEncoder, ImageEncoder, ProprioEncoder,
                       TextEncoder, images_to_tensor, tokenize)
from .phase import (normalize_rows, phase_distribution, phase_logits,
                    phase_outputs, progress_scalar, sigmoid, softmax,
                    stage_completion)

__all__ = [
    "Coordinator", "FrameEncoding", "assemble_z", "latent_dim", "z_slices",
    "FusionEncoder", "ImageEncoder", "ProprioEncoder", "TextEncoder",
    "images_to_tensor", "tokenize",
    "normalize_rows", "phase_distribution", "phase_logits", "phase_outputs",
    "progress_scalar", "sigmoid", "softmax", "stage_completion",
]
