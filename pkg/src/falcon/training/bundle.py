"""Training bundles: everything needed to run a trained policy pair.

A bundle file carries the coordinator weights (with frozen perception),
both diffusion policies, the contrastive projection heads when present,
the action normalizers and the config fingerprint. Loading rebuilds the
modules in eval mode and can hand out ready-to-run policy drivers.
"""

from __future__ import annotations

import io
from dataclasses import dataclass
from pathlib import Path

import torch

from ..chunkfile import ChunkReader, ChunkWriter
from ..config import RunConfig, config_hash
from ..coordinator import Coordinator, latent_dim
from ..coordloss import CoordinationLoss
from ..policy import (ARM_DIM, BASE_DIM, ActionNormalizer, DiffusionPolicy,
                      PolicyRunner, cond_dim)

__all__ = ["TrainedBundle", "save_bundle", "load_bundle", "BUNDLE_KIND"]

BUNDLE_KIND = "policy-bundle"
BUNDLE_VERSION = 1


@dataclass
class TrainedBundle:
    cfg: RunConfig
    variant: str
    coordinator: Coordinator
    arm_policy: DiffusionPolicy
    base_policy: DiffusionPolicy
    arm_norm: ActionNormalizer
    base_norm: ActionNormalizer
    coord_loss: CoordinationLoss | None = None
    meta: dict | None = None

    def make_runner(self, task_id: str, seed: int = 0) -> PolicyRunner:
        return PolicyRunner(self.cfg, self.coordinator, self.arm_policy,
                            self.base_policy, self.arm_norm, self.base_norm,
                            task_id, seed=seed)


def _blob(module: torch.nn.Module) -> bytes:
    buf = io.BytesIO()
    torch.save(module.state_dict(), buf)
    return buf.getvalue()


def _load_into(module: torch.nn.Module, payload: bytes) -> None:
    state = torch.load(io.BytesIO(payload), weights_only=True)
    module.load_state_dict(state)


def save_bundle(path, trainer, extra_meta: dict | None = None) -> Path:
    """Write a JointTrainer's trained state to one bundle file."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    meta = {
        "variant": trainer.variant,
        "config": config_hash(trainer.cfg),
        "tasks": list(trainer.tasks),
        "zero_phase": bool(trainer.zero_phase),
        "delta": float(trainer.effective_delta),
    }
    if extra_meta:
        meta.update(extra_meta)
    with ChunkWriter(path, kind=BUNDLE_KIND, version=BUNDLE_VERSION,
                     meta=meta) as w:
        w.add("coordinator.pt", _blob(trainer.coordinator))
        w.add("arm_policy.pt", _blob(trainer.arm_policy))
        w.add("base_policy.pt", _blob(trainer.base_policy))
        if trainer.coord_loss is not None:
            w.add("coord_loss.pt", _blob(trainer.coord_loss))
        w.add_json("normalizers", {"arm": trainer.arm_norm.to_json(),
                                   "base": trainer.base_norm.to_json()})
    return path


def load_bundle(path, cfg: RunConfig, strict_config: bool = True) -> TrainedBundle:
    """Rebuild a trained bundle; modules come back frozen in eval mode."""
    r = ChunkReader(path, expect_kind=BUNDLE_KIND)
    if r.version != BUNDLE_VERSION:
        raise IOError(f"{path}: unsupported bundle version {r.version}")
    meta = dict(r.meta)
    if strict_config:
        # the stored hash was taken with train.variant set to this bundle's
        # variant; compare apples to apples so one config can load any variant
        held = cfg.train.variant
        cfg.train.variant = meta["variant"]
        expect = config_hash(cfg)
        cfg.train.variant = held
        if meta["config"] != expect:
            raise ValueError(
                f"{path}: bundle was trained under config {meta['config']}, "
                f"current config hashes to {expect}")
    coordinator = Coordinator(cfg, zero_phase=bool(meta.get("zero_phase")))
    _load_into(coordinator, r.raw("coordinator.pt"))
    coordinator.refresh_prompts()
    width = cond_dim(cfg)
    arm_policy = DiffusionPolicy(ARM_DIM, width, cfg.policy)
    base_policy = DiffusionPolicy(BASE_DIM, width, cfg.policy)
    _load_into(arm_policy, r.raw("arm_policy.pt"))
    _load_into(base_policy, r.raw("base_policy.pt"))
    coord_loss = None
    if "coord_loss.pt" in r:
        coord_loss = CoordinationLoss(latent_dim(cfg), ARM_DIM + BASE_DIM,
                                      ARM_DIM, cfg.loss)
        _load_into(coord_loss, r.raw("coord_loss.pt"))
    norms = r.json("normalizers")
    for module in (coordinator, arm_policy, base_policy):
        module.eval()
        for p in module.parameters():
            p.requires_grad_(False)
    return TrainedBundle(
        cfg=cfg, variant=meta["variant"], coordinator=coordinator,
        arm_policy=arm_policy, base_policy=base_policy,
        arm_norm=ActionNormalizer.from_json(norms["arm"]),
        base_norm=ActionNormalizer.from_json(norms["base"]),
        coord_loss=coord_loss, meta=meta,
    )
