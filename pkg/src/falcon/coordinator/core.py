"""The coordinator bundles the modality encoders, caption caches and phase
head into one module that turns a raw observation into the shared
conditioning latent consumed by both action policies.

Latent layout (width d_model + K + 1):
    z[0:D]        fused multimodal vector h
    z[D:D+K]      phase distribution rho over the K task stages
    z[D+K]        scalar progress p in [0, 1)

The ``zero_phase`` flag supports the ablation that removes the language
phase signal: rho and p are written as zeros while h is kept.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import torch
import torch.nn as nn

from ..config import RunConfig
from ..tasks import TASKS, TaskSpec
from ..world.types import ObservationBundle
from . import phase as ph
from .encoders import (FusionEncoder, ImageEncoder, ProprioEncoder,
                       TextEncoder, images_to_tensor)

__all__ = ["Coordinator", "FrameEncoding", "latent_dim", "z_slices", "assemble_z"]

VIEW_ORDER = ("wrist", "body", "head")


def latent_dim(cfg: RunConfig) -> int:
    return cfg.encoder.d_model + cfg.encoder.n_stages + 1


def z_slices(cfg: RunConfig) -> dict:
    d, k = cfg.encoder.d_model, cfg.encoder.n_stages
    return {"h": slice(0, d), "rho": slice(d, d + k), "p": slice(d + k, d + k + 1)}


def assemble_z(h: np.ndarray, rho: np.ndarray, p: float) -> np.ndarray:
    return np.concatenate([np.asarray(h, dtype=np.float32).ravel(),
                           np.asarray(rho, dtype=np.float32).ravel(),
                           np.asarray([p], dtype=np.float32)])


@dataclass
class FrameEncoding:
    """Everything derived from one observation frame."""

    h: np.ndarray          # (D,) fused vector
    f: np.ndarray          # (d_f,) unit mean image embedding
    img_emb: np.ndarray    # (3, d_f) per-view image embeddings
    rho: np.ndarray        # (K,) phase distribution
    completion: np.ndarray  # (K,) per-stage completion gates
    p: float               # scalar progress
    z: np.ndarray          # (D + K + 1,) conditioning latent


class Coordinator(nn.Module):
    """Encoders plus caption caches for one prompt family."""

    def __init__(self, cfg: RunConfig, zero_phase: bool = False):
        super().__init__()
        self.cfg = cfg
        self.zero_phase = zero_phase
        self.image = ImageEncoder(cfg.encoder)
        self.text = TextEncoder(cfg.encoder)
        self.proprio = ProprioEncoder(cfg.encoder)
        self.fusion = FusionEncoder(cfg.encoder)
        self._prompt_cache: dict = {}

    # ---------------------------------------------------------------- prompts

    def refresh_prompts(self) -> None:
        """Recompute caption and instruction embeddings for all tasks."""
        self._prompt_cache.clear()
        with torch.no_grad():
            for task_id, spec in TASKS.items():
                ongoing = self.text.encode_batch([s.ongoing for s in spec.phases])
                done = self.text.encode_batch([s.done for s in spec.phases])
                instr = self.text.encode_batch([spec.instruction])[0]
                self._prompt_cache[task_id] = {
                    "ongoing": ph.normalize_rows(ongoing.numpy().astype(np.float64)),
                    "done": ph.normalize_rows(done.numpy().astype(np.float64)),
                    "instr": instr,
                }

    def _prompts(self, task_id: str) -> dict:
        if task_id not in self._prompt_cache:
            if task_id not in TASKS:
                raise KeyError(f"unknown task {task_id!r}")
            self.refresh_prompts()
        return self._prompt_cache[task_id]

    def task_spec(self, task_id: str) -> TaskSpec:
        return TASKS[task_id]

    # ------------------------------------------------------------ batched ops

    def embed_views(self, views: np.ndarray) -> torch.Tensor:
        """uint8 (B, 3, R, R, 3) -> (B, 3, d_f) per-view embeddings."""
        b = views.shape[0]
        x = images_to_tensor(views.reshape((-1,) + views.shape[2:]))
        return self.image(x).reshape(b, 3, -1)

    def phase_from_image_emb(self, img_emb: np.ndarray, task_id: str) -> tuple:
        """(B, 3, d_f) image embeddings -> (rho (B, K), c (B, K), p (B,))."""
        pr = self._prompts(task_id)
        f = ph.normalize_rows(np.asarray(img_emb, dtype=np.float64).mean(axis=-2))
        return ph.phase_outputs(f, pr["ongoing"], pr["done"], self.cfg.encoder.alpha)

    def fuse_cached(self, img_emb: torch.Tensor, proprio: torch.Tensor,
                    task_id: str) -> torch.Tensor:
        """Fused h from cached image embeddings and raw proprio (B, 14)."""
        pr = self._prompts(task_id)
        text = pr["instr"].unsqueeze(0).expand(img_emb.shape[0], -1)
        return self.fusion(img_emb, self.proprio(proprio), text)

    # ------------------------------------------------------------ frame level

    def encode_frame(self, obs: ObservationBundle, task_id: str) -> FrameEncoding:
        views = np.stack([obs.views[v] for v in VIEW_ORDER])[None]
        with torch.no_grad():
            img_emb = self.embed_views(views)
            prop = torch.as_tensor(obs.proprio, dtype=torch.float32)[None]
            h = self.fuse_cached(img_emb, prop, task_id)[0].numpy()
        img_np = img_emb[0].numpy()
        rho, c, p = self.phase_from_image_emb(img_np[None], task_id)
        rho, c, p = rho[0], c[0], float(p[0])
        if self.zero_phase:
            z = assemble_z(h, np.zeros_like(rho), 0.0)
        else:
            z = assemble_z(h, rho, p)
        f = ph.normalize_rows(img_np.mean(axis=0))
        return FrameEncoding(h=h.astype(np.float32), f=f.astype(np.float32),
                             img_emb=img_np.astype(np.float32),
                             rho=rho.astype(np.float32),
                             completion=c.astype(np.float32), p=p, z=z)

    def latent_from_cached(self, h: np.ndarray, rho: np.ndarray,
                           p: float) -> np.ndarray:
        if self.zero_phase:
            return assemble_z(h, np.zeros_like(rho), 0.0)
        return assemble_z(h, rho, p)

    # ------------------------------------------------------------- freezing

    def freeze_perception(self) -> None:
        """Freeze image and text encoders after alignment pretraining."""
        for p in self.image.parameters():
            p.requires_grad_(False)
        for p in self.text.parameters():
            p.requires_grad_(False)
        self.image.eval()
        self.text.eval()
