"""Receding-horizon execution of the two diffusion policies.

At every high-level tick the runner encodes the observation through the
coordinator, keeps a short history of conditioning frames, and every
``h_exec`` ticks samples fresh action chunks for the arm and the base.
Between re-plans it plays back the remaining chunk entries.
"""

from __future__ import annotations

from collections import deque

import numpy as np
import torch

from ..config import RunConfig
from ..coordinator import Coordinator, latent_dim
from ..world.types import ObservationBundle
from .diffusion import DiffusionPolicy
from .normalizer import ActionNormalizer

__all__ = ["PolicyRunner", "cond_dim", "build_condition", "ARM_DIM", "BASE_DIM"]

ARM_DIM = 3   # ee_x, ee_y, gripper
BASE_DIM = 5  # vx, vy, wz, pitch_cmd, height_cmd


def cond_dim(cfg: RunConfig) -> int:
    """Width of the conditioning vector fed to both denoisers."""
    per_frame = latent_dim(cfg) + cfg.encoder.proprio_dim
    return cfg.policy.t_obs * per_frame


def build_condition(frames: list) -> np.ndarray:
    """Concatenate (z, proprio) pairs oldest-first into one vector."""
    parts = []
    for z, proprio in frames:
        parts.append(np.asarray(z, dtype=np.float32).ravel())
        parts.append(np.asarray(proprio, dtype=np.float32).ravel())
    return np.concatenate(parts)


class PolicyRunner:
    """Drives a trained policy bundle as a source of tick commands."""

    def __init__(self, cfg: RunConfig, coordinator: Coordinator,
                 arm_policy: DiffusionPolicy, base_policy: DiffusionPolicy,
                 arm_norm: ActionNormalizer, base_norm: ActionNormalizer,
                 task_id: str, seed: int = 0):
        self.cfg = cfg
        self.coordinator = coordinator
        self.arm_policy = arm_policy
        self.base_policy = base_policy
        self.arm_norm = arm_norm
        self.base_norm = base_norm
        self.task_id = task_id
        self.gen = torch.Generator().manual_seed(seed)
        self.history: deque = deque(maxlen=cfg.policy.t_obs)
        self.arm_chunk: np.ndarray | None = None
        self.base_chunk: np.ndarray | None = None
        self.cursor = 0

    def reset(self, seed: int | None = None) -> None:
        if seed is not None:
            self.gen = torch.Generator().manual_seed(seed)
        self.history.clear()
        self.arm_chunk = None
        self.base_chunk = None
        self.cursor = 0

    def _condition(self) -> torch.Tensor:
        frames = list(self.history)
        while len(frames) < self.cfg.policy.t_obs:
            frames.insert(0, frames[0])
        return torch.as_tensor(build_condition(frames), dtype=torch.float32)[None]

    def _replan(self) -> None:
        cond = self._condition()
        arm_n = self.arm_policy.sample(cond, self.gen)[0].numpy()
        base_n = self.base_policy.sample(cond, self.gen)[0].numpy()
        self.arm_chunk = self.arm_norm.denormalize(arm_n)
        self.base_chunk = self.base_norm.denormalize(base_n)
        self.cursor = 0

    def __call__(self, obs: ObservationBundle) -> tuple:
        """One 10 Hz tick: returns (arm_cmd (3,), base_cmd (5,))."""
        enc = self.coordinator.encode_frame(obs, self.task_id)
        self.history.append((enc.z, obs.proprio.astype(np.float32)))
        if self.arm_chunk is None or self.cursor >= self.cfg.policy.h_exec:
            self._replan()
        arm = self.arm_chunk[self.cursor]
        base = self.base_chunk[self.cursor]
        self.cursor += 1
        return arm, base
