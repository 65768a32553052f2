"""Conditional denoising diffusion over short action chunks.

Each policy predicts a chunk of ``horizon`` future actions in normalized
action space. Training regresses the injected Gaussian noise (epsilon
parameterization); sampling runs the full ancestral reverse process with a
cosine noise schedule. The noise draw and timestep are injectable so the
loss is deterministic under test.
"""

from __future__ import annotations

import math

import numpy as np
import torch
import torch.nn as nn

from ..config import PolicyConfig

__all__ = ["cosine_alpha_bar", "make_schedule", "DenoiserNet",
           "DiffusionPolicy", "CHUNK_CLAMP"]

CHUNK_CLAMP = 1.5  # normalized actions are clipped here after sampling


def cosine_alpha_bar(steps: int, s: float = 0.008) -> np.ndarray:
    """Cumulative signal fraction alpha_bar for t = 0..steps (inclusive)."""
    t = np.linspace(0.0, 1.0, steps + 1)
    f = np.cos((t + s) / (1.0 + s) * math.pi / 2.0) ** 2
    return f / f[0]


def make_schedule(steps: int) -> dict:
    """Beta/alpha tables for a cosine schedule, all length ``steps``."""
    ab = cosine_alpha_bar(steps)
    betas = np.clip(1.0 - ab[1:] / ab[:-1], 1e-8, 0.999)
    alphas = 1.0 - betas
    alpha_bar = np.cumprod(alphas)
    prev = np.concatenate([[1.0], alpha_bar[:-1]])
    post_var = betas * (1.0 - prev) / (1.0 - alpha_bar)
    return {
        "betas": betas, "alphas": alphas, "alpha_bar": alpha_bar,
        "alpha_bar_prev": prev, "posterior_var": post_var,
    }


def timestep_embedding(t: torch.Tensor, dim: int,
                       dtype: torch.dtype = torch.float32) -> torch.Tensor:
    """Standard sinusoidal embedding of integer timesteps, shape (B, dim)."""
    half = dim // 2
    freqs = torch.exp(-math.log(1000.0) * torch.arange(half, dtype=dtype) / half)
    ang = t.to(dtype)[:, None] * freqs[None, :]
    return torch.cat([torch.sin(ang), torch.cos(ang)], dim=-1)


class _ResBlock(nn.Module):
    def __init__(self, width: int):
        super().__init__()
        self.net = nn.Sequential(
            nn.LayerNorm(width), nn.Linear(width, width), nn.SiLU(),
            nn.Linear(width, width))

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        return x + self.net(x)


class DenoiserNet(nn.Module):
    """Residual MLP predicting the injected noise for a flattened chunk."""

    def __init__(self, act_dim: int, horizon: int, cond_dim: int,
                 hidden: int = 256, blocks: int = 3, time_embed: int = 64):
        super().__init__()
        self.act_dim, self.horizon = act_dim, horizon
        self.time_embed = time_embed
        flat = act_dim * horizon
        self.time_mlp = nn.Sequential(
            nn.Linear(time_embed, hidden), nn.SiLU(), nn.Linear(hidden, hidden))
        self.inp = nn.Sequential(
            nn.Linear(flat + cond_dim + hidden, hidden), nn.SiLU())
        self.blocks = nn.Sequential(*[_ResBlock(hidden) for _ in range(blocks)])
        self.out = nn.Linear(hidden, flat)

    def forward(self, x: torch.Tensor, t: torch.Tensor,
                cond: torch.Tensor) -> torch.Tensor:
        """x (B, H, A); t (B,) integer steps; cond (B, C) -> epsilon (B, H, A)."""
        b = x.shape[0]
        dtype = self.out.weight.dtype
        temb = self.time_mlp(timestep_embedding(t, self.time_embed, dtype))
        h = self.inp(torch.cat([x.reshape(b, -1), cond, temb], dim=-1))
        h = self.blocks(h)
        return self.out(h).reshape(b, self.horizon, self.act_dim)


class DiffusionPolicy(nn.Module):
    """One action head: denoiser plus its noise schedule."""

    def __init__(self, act_dim: int, cond_dim: int, cfg: PolicyConfig):
        super().__init__()
        self.act_dim = act_dim
        self.cond_dim = cond_dim
        self.horizon = cfg.horizon
        self.t_diff = cfg.t_diff
        self.net = DenoiserNet(act_dim, cfg.horizon, cond_dim, cfg.hidden,
                               cfg.blocks, cfg.time_embed)
        sched = make_schedule(cfg.t_diff)
        for k, v in sched.items():
            self.register_buffer(k, torch.as_tensor(v, dtype=torch.float64))

    def q_sample(self, x0: torch.Tensor, t: torch.Tensor,
                 eps: torch.Tensor) -> torch.Tensor:
        ab = self.alpha_bar[t].to(x0.dtype)[:, None, None]
        return ab.sqrt() * x0 + (1.0 - ab).sqrt() * eps

    def training_loss(self, x0: torch.Tensor, cond: torch.Tensor,
                      t: torch.Tensor | None = None,
                      eps: torch.Tensor | None = None,
                      generator: torch.Generator | None = None) -> torch.Tensor:
        """Mean squared error of the predicted noise; t and eps injectable."""
        b = x0.shape[0]
        if t is None:
            t = torch.randint(0, self.t_diff, (b,), generator=generator)
        if eps is None:
            eps = torch.randn(x0.shape, generator=generator, dtype=x0.dtype)
        xt = self.q_sample(x0, t, eps)
        pred = self.net(xt, t, cond)
        return ((pred - eps) ** 2).mean()

    @torch.no_grad()
    def sample(self, cond: torch.Tensor,
               generator: torch.Generator | None = None) -> torch.Tensor:
        """Ancestral reverse process; returns (B, H, A) clipped chunks."""
        b = cond.shape[0]
        dtype = self.net.out.weight.dtype
        x = torch.randn((b, self.horizon, self.act_dim), generator=generator,
                        dtype=dtype)
        for step in range(self.t_diff - 1, -1, -1):
            t = torch.full((b,), step, dtype=torch.long)
            eps = self.net(x, t, cond)
            alpha = float(self.alphas[step])
            ab = float(self.alpha_bar[step])
            x = (x - (1.0 - alpha) / math.sqrt(1.0 - ab) * eps) / math.sqrt(alpha)
            if step > 0:
                noise = torch.randn(x.shape, generator=generator, dtype=dtype)
                x = x + math.sqrt(float(self.posterior_var[step])) * noise
        return x.clamp(-CHUNK_CLAMP, CHUNK_CLAMP)
