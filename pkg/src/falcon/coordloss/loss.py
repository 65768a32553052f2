"""Symmetric InfoNCE between observation latents and joint action summaries."""

from __future__ import annotations

import numpy as np
import torch
import torch.nn as nn
import torch.nn.functional as F

from ..config import LossConfig

__all__ = [
    "derangement", "summarize_latents", "summarize_chunks",
    "mismatched_composites", "ProjectionHead", "info_nce", "CoordinationLoss",
]


def derangement(n: int, rng: np.random.Generator) -> np.ndarray:
    """Uniform random permutation of range(n) with no fixed points.

    Rejection sampling; a derangement of a single element does not exist.
    """
    if n < 2:
        raise ValueError(f"derangement needs n >= 2, got {n}")
    while True:
        perm = rng.permutation(n)
        if not np.any(perm == np.arange(n)):
            return perm


def summarize_latents(z_seq: torch.Tensor) -> torch.Tensor:
    """Temporal mean over the observation window: (B, T, Dz) -> (B, Dz)."""
    return z_seq.mean(dim=1)


def summarize_chunks(arm: torch.Tensor, base: torch.Tensor) -> torch.Tensor:
    """Chunk means concatenated per sample: (B,H,3),(B,H,5) -> (B,8)."""
    return torch.cat([arm.mean(dim=1), base.mean(dim=1)], dim=-1)


def mismatched_composites(u: torch.Tensor, arm_dim: int,
                          lam: torch.Tensor) -> tuple:
    """Swap one subsystem's summary with a deranged partner's.

    Returns (arm_kept, base_kept): in the first the base half comes from
    lam, in the second the arm half does.
    """
    arm, base = u[:, :arm_dim], u[:, arm_dim:]
    return (torch.cat([arm, base[lam]], dim=-1),
            torch.cat([arm[lam], base], dim=-1))


class ProjectionHead(nn.Module):
    """Two-layer MLP onto the unit sphere of the contrastive space."""

    def __init__(self, in_dim: int, hidden: int, out_dim: int):
        super().__init__()
        self.net = nn.Sequential(
            nn.Linear(in_dim, hidden), nn.SiLU(), nn.Linear(hidden, out_dim))

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        return F.normalize(self.net(x), dim=-1, eps=1e-8)


def info_nce(anchors: torch.Tensor, candidates: torch.Tensor,
             tau: float) -> torch.Tensor:
    """Cross entropy with candidate i as the positive for anchor i.

    anchors (B, D); candidates (C, D) with C >= B and the first B rows
    aligned to the anchors.
    """
    logits = anchors @ candidates.T / tau
    labels = torch.arange(anchors.shape[0], device=logits.device)
    return F.cross_entropy(logits, labels)


class CoordinationLoss(nn.Module):
    """Projection heads plus the symmetric contrastive objective."""

    def __init__(self, z_dim: int, act_sum_dim: int, arm_dim: int,
                 cfg: LossConfig):
        super().__init__()
        self.arm_dim = arm_dim
        self.tau = cfg.tau
        self.p_obs = ProjectionHead(z_dim, cfg.proj_hidden, cfg.d_c)
        self.p_act = ProjectionHead(act_sum_dim, cfg.proj_hidden, cfg.d_c)

    def forward(self, z_bar: torch.Tensor, u: torch.Tensor,
                lam: torch.Tensor) -> torch.Tensor:
        """z_bar (B, Dz); u (B, 8); lam (B,) derangement indices."""
        v = self.p_obs(z_bar)
        w = self.p_act(u)
        mis_a, mis_b = mismatched_composites(u, self.arm_dim, lam)
        w_all = torch.cat([w, self.p_act(mis_a), self.p_act(mis_b)], dim=0)
        loss_zu = info_nce(v, w_all, self.tau)
        loss_uz = info_nce(w, v, self.tau)
        return 0.5 * (loss_zu + loss_uz)
