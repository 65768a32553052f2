"""Joint training of both action policies on top of frozen perception.

Each optimization step draws a batch of observation windows from one
task's demonstrations, rebuilds the conditioning latents through the
trainable fusion stack (image/text encoders stay frozen, their outputs
come from the frame cache) and takes a gradient step on

    total = arm denoising loss + base denoising loss
            + delta * coordination contrastive loss.

Ablation variants reuse the same loop: "no_cl" drops the contrastive
term, "no_phase_cl" additionally zeroes the phase block of the latent.
"""

from __future__ import annotations

import numpy as np
import torch

from ..config import RunConfig
from ..coordinator import latent_dim
from ..coordloss import CoordinationLoss, derangement, summarize_chunks
from ..policy import (ARM_DIM, BASE_DIM, ActionNormalizer, DiffusionPolicy,
                      cond_dim)

__all__ = ["JointTrainer", "VARIANTS"]

VARIANTS = ("falcon", "no_cl", "no_phase_cl")


class JointTrainer:
    """One training run: policies, normalizers and the optimization loop."""

    def __init__(self, cfg: RunConfig, coordinator, datasets: dict,
                 caches: dict, seed: int = 0):
        variant = cfg.train.variant
        if variant not in VARIANTS:
            raise ValueError(f"unknown variant {variant!r}; pick from {VARIANTS}")
        self.cfg = cfg
        self.variant = variant
        self.zero_phase = variant == "no_phase_cl"
        self.use_coord = variant == "falcon"
        self.effective_delta = cfg.loss.delta if self.use_coord else 0.0
        self.coordinator = coordinator
        coordinator.zero_phase = self.zero_phase
        self.datasets = datasets
        self.caches = caches
        self.tasks = sorted(datasets)

        torch.manual_seed(seed)
        self.rng = np.random.default_rng(seed + 1)
        self.gen = torch.Generator().manual_seed(seed + 2)

        arm_all = np.concatenate([datasets[t].action_matrix()[0] for t in self.tasks])
        base_all = np.concatenate([datasets[t].action_matrix()[1] for t in self.tasks])
        self.arm_norm = ActionNormalizer.from_data(arm_all)
        self.base_norm = ActionNormalizer.from_data(base_all)

        prop_all = np.concatenate([ep.proprio for t in self.tasks
                                   for ep in datasets[t].episodes])
        coordinator.proprio.set_stats(prop_all.mean(axis=0), prop_all.std(axis=0))

        width = cond_dim(cfg)
        self.arm_policy = DiffusionPolicy(ARM_DIM, width, cfg.policy)
        self.base_policy = DiffusionPolicy(BASE_DIM, width, cfg.policy)
        self.coord_loss = None
        if self.use_coord:
            self.coord_loss = CoordinationLoss(latent_dim(cfg),
                                               ARM_DIM + BASE_DIM, ARM_DIM,
                                               cfg.loss)
        params = [p for p in coordinator.parameters() if p.requires_grad]
        params += list(self.arm_policy.parameters())
        params += list(self.base_policy.parameters())
        if self.coord_loss is not None:
            params += list(self.coord_loss.parameters())
        self.opt = torch.optim.Adam(params, lr=cfg.train.lr,
                                    weight_decay=cfg.train.weight_decay)

    # ------------------------------------------------------------- batching

    def _gather(self, task: str, picks: np.ndarray) -> dict:
        """Stack cached windows for the sampled indices of one task."""
        ds = self.datasets[task]
        cache = self.caches[task]
        t_obs, horizon = self.cfg.policy.t_obs, self.cfg.policy.horizon
        img, prop, rho, prog, arm, base = [], [], [], [], [], []
        for idx in picks:
            w = ds.index[idx]
            row = ds.sample_rows(idx)
            fc = cache[w.episode]
            sl = slice(w.offset, w.offset + t_obs)
            img.append(fc.img_emb[sl])
            rho.append(fc.rho[sl])
            prog.append(fc.p[sl])
            prop.append(row["proprio"])
            arm.append(row["arm_chunk"])
            base.append(row["base_chunk"])
        return {
            "img_emb": torch.stack(img),
            "proprio": torch.as_tensor(np.stack(prop), dtype=torch.float32),
            "rho": torch.as_tensor(np.stack(rho), dtype=torch.float32),
            "p": torch.as_tensor(np.stack(prog), dtype=torch.float32),
            "arm": torch.as_tensor(
                self.arm_norm.normalize(np.stack(arm)), dtype=torch.float32),
            "base": torch.as_tensor(
                self.base_norm.normalize(np.stack(base)), dtype=torch.float32),
        }

    def _condition(self, batch: dict, task: str) -> tuple:
        """(cond (B, W), z (B, t_obs, Dz)) through the trainable fusion."""
        b, t_obs = batch["proprio"].shape[:2]
        img = batch["img_emb"].reshape(b * t_obs, *batch["img_emb"].shape[2:])
        prop = batch["proprio"].reshape(b * t_obs, -1)
        h = self.coordinator.fuse_cached(img, prop, task).reshape(b, t_obs, -1)
        rho, p = batch["rho"], batch["p"]
        if self.zero_phase:
            rho = torch.zeros_like(rho)
            p = torch.zeros_like(p)
        z = torch.cat([h, rho, p.unsqueeze(-1)], dim=-1)
        frames = torch.cat([z, batch["proprio"]], dim=-1)
        return frames.reshape(b, -1), z

    # ------------------------------------------------------------ optimizing

    def step(self, step_idx: int) -> dict:
        task = self.tasks[step_idx % len(self.tasks)]
        ds = self.datasets[task]
        picks = self.rng.integers(0, len(ds), size=self.cfg.train.batch)
        batch = self._gather(task, picks)
        cond, z = self._condition(batch, task)
        l_arm = self.arm_policy.training_loss(batch["arm"], cond,
                                              generator=self.gen)
        l_base = self.base_policy.training_loss(batch["base"], cond,
                                                generator=self.gen)
        loss = l_arm + l_base
        l_coord = torch.zeros(())
        if self.coord_loss is not None:
            z_bar = z.mean(dim=1)
            u = summarize_chunks(batch["arm"], batch["base"])
            lam = torch.as_tensor(derangement(len(u), self.rng))
            l_coord = self.coord_loss(z_bar, u, lam)
            loss = loss + self.cfg.loss.delta * l_coord
        self.opt.zero_grad()
        loss.backward()
        self.opt.step()
        return {"task": task, "l_arm": l_arm.item(), "l_base": l_base.item(),
                "l_coord": l_coord.item(), "total": loss.item()}

    def train(self, log=None) -> list:
        """Run the configured number of steps; returns interval metric rows."""
        t = self.cfg.train
        rows = []
        acc = {"l_arm": 0.0, "l_base": 0.0, "l_coord": 0.0, "total": 0.0}
        n = 0
        for i in range(t.steps):
            m = self.step(i)
            for k in acc:
                acc[k] += m[k]
            n += 1
            if (i + 1) % t.log_every == 0 or i + 1 == t.steps:
                row = {"step": i + 1}
                row.update({k: v / n for k, v in acc.items()})
                rows.append(row)
                if log is not None:
                    log(row)
                acc = {k: 0.0 for k in acc}
                n = 0
        return rows
