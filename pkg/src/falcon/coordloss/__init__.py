"""Coordination-aware contrastive objective.

Ties the shared observation latent to the pair of action chunks the two
subsystems are about to execute. Beyond the usual batch negatives, each
anchor also competes against "mismatched" composites where one subsystem's
chunk summary is swapped with another sample's via a derangement, which
forces the latent to encode the relation between arm and base rather than
either stream alone.
"""

from .loss import (CoordinationLoss, ProjectionHead, derangement, info_nce,
                   mismatched_composites, summarize_chunks,
                   summarize_latents)

__all__ = [
    "CoordinationLoss", "ProjectionHead", "derangement", "info_nce",
    "mismatched_composites", "summarize_chunks", "summarize_latents",
]
