"""Vision-language alignment pretraining.

The image and text encoders are trained jointly so that a frame's mean
view embedding lands near the caption describing the scene's current
stage. Each task contributes 2K caption classes (one ongoing and one done
caption per stage); the recorded per-tick stage annotation provides the
class label, and a symmetric-free cross entropy over the caption bank
pulls matching pairs together. After this step the encoders are frozen
and every later consumer (phase head, fusion, policies) builds on them.
"""

from __future__ import annotations

import numpy as np
import torch
import torch.nn.functional as F

from ..config import RunConfig
from ..tasks import TASKS
from ..coordinator.encoders import images_to_tensor

__all__ = ["caption_bank", "pretrain_alignment"]


def caption_bank(task_id: str) -> list:
    """Caption strings for a task, indexed by the recorded class label.

    Label 2k is the ongoing caption of stage k, label 2k+1 its done
    caption, matching the ordering used when episodes are annotated.
    """
    spec = TASKS[task_id]
    out = []
    for ph in spec.phases:
        out.append(ph.ongoing)
        out.append(ph.done)
    return out


def _frame_pool(episodes: list) -> tuple:
    """Flatten episodes into parallel (views, labels) arrays."""
    views = np.concatenate([ep.views for ep in episodes])
    labels = np.concatenate([ep.phase_labels for ep in episodes]).astype(np.int64)
    return views, labels


def pretrain_alignment(coordinator, episodes_by_task: dict, cfg: RunConfig,
                       seed: int = 0, log=None) -> list:
    """Train image+text encoders; returns per-interval metric rows.

    ``episodes_by_task`` maps task_id -> list of recorded episodes. Steps
    alternate between tasks so neither caption family dominates.
    """
    t = cfg.train
    tau = cfg.encoder.tau_align
    rng = np.random.default_rng(seed)
    torch.manual_seed(seed + 1)
    tasks = sorted(episodes_by_task)
    pools = {k: _frame_pool(v) for k, v in episodes_by_task.items()}
    captions = {k: caption_bank(k) for k in tasks}
    params = list(coordinator.image.parameters()) + list(coordinator.text.parameters())
    opt = torch.optim.Adam(params, lr=t.pretrain_lr, weight_decay=t.weight_decay)
    coordinator.image.train()
    coordinator.text.train()
    rows = []
    running = {"loss": 0.0, "acc": 0.0, "n": 0}
    for step in range(t.pretrain_steps):
        task = tasks[step % len(tasks)]
        views, labels = pools[task]
        pick = rng.integers(0, len(labels), size=t.pretrain_batch)
        imgs = images_to_tensor(views[pick].reshape((-1,) + views.shape[2:]))
        emb = coordinator.image(imgs).reshape(len(pick), views.shape[1], -1)
        f = F.normalize(emb.mean(dim=1), dim=-1)
        bank = F.normalize(coordinator.text.encode_batch(captions[task]), dim=-1)
        logits = f @ bank.T / tau
        target = torch.as_tensor(labels[pick])
        loss = F.cross_entropy(logits, target)
        opt.zero_grad()
        loss.backward()
        opt.step()
        running["loss"] += loss.item()
        running["acc"] += (logits.argmax(dim=1) == target).float().mean().item()
        running["n"] += 1
        if (step + 1) % t.log_every == 0 or step + 1 == t.pretrain_steps:
            row = {"step": step + 1,
                   "loss": running["loss"] / running["n"],
                   "acc": running["acc"] / running["n"]}
            rows.append(row)
            if log is not None:
                log(row)
            running = {"loss": 0.0, "acc": 0.0, "n": 0}
    coordinator.image.eval()
    coordinator.text.eval()
    coordinator.refresh_prompts()
    return rows
