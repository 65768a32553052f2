"""Per-frame embedding cache computed once after the encoders freeze.

Joint policy training touches every recorded frame thousands of times;
recomputing the image encoder each time would dominate the budget. With
the perception encoders frozen, per-view embeddings and the phase outputs
are constants of the dataset, so they are computed once here and the
trainable fusion stack runs on top of the cached values.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import torch

__all__ = ["FrameCache", "build_frame_cache"]


@dataclass
class FrameCache:
    """Frozen-encoder outputs for every tick of one episode."""

    img_emb: torch.Tensor   # (T, 3, d_f) float32
    rho: np.ndarray         # (T, K) float32 phase distribution
    p: np.ndarray           # (T,) float32 scalar progress


def build_frame_cache(coordinator, episodes: list, batch: int = 128) -> list:
    """Embed every frame of every episode; returns one FrameCache per episode."""
    out = []
    with torch.no_grad():
        for ep in episodes:
            chunks = []
            for s in range(0, len(ep), batch):
                chunks.append(coordinator.embed_views(ep.views[s:s + batch]))
            img_emb = torch.cat(chunks)
            rho, _, p = coordinator.phase_from_image_emb(img_emb.numpy(), ep.task_id)
            out.append(FrameCache(img_emb=img_emb.float(),
                                  rho=rho.astype(np.float32),
                                  p=p.astype(np.float32)))
    return out
