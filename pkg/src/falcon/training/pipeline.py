"""End-to-end training orchestration.

Order of operations: load demonstrations, pretrain and freeze the
perception encoders, cache per-frame embeddings, run joint policy
training, then write the bundle plus metric curves next to it.

The perception encoders and the frame cache do not depend on the training
variant, so ``train_all`` computes them once and reuses them for every
variant; ablations then differ only in the joint losses they optimize.
"""

from __future__ import annotations

import csv
import time
from pathlib import Path

import torch

from ..config import RunConfig
from ..coordinator import Coordinator
from ..data import ChunkDataset
from .align import pretrain_alignment
from .bundle import save_bundle
from .cache import build_frame_cache
from .joint import VARIANTS, JointTrainer

__all__ = ["train_variant", "train_all", "bundle_path"]


def bundle_path(out_dir, variant: str) -> Path:
    return Path(out_dir) / f"{variant}.bundle"


def _write_rows(path: Path, rows: list) -> None:
    if not rows:
        return
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, fieldnames=list(rows[0]))
        writer.writeheader()
        writer.writerows(rows)


def _load_datasets(cfg: RunConfig, demos_dir, tasks: tuple) -> dict:
    return {t: ChunkDataset.from_dir(Path(demos_dir) / t, cfg) for t in tasks}


def _new_coordinator(cfg: RunConfig, seed: int) -> Coordinator:
    torch.manual_seed(seed)
    return Coordinator(cfg)


def _align_and_freeze(cfg, coordinator, datasets, seed, say, out_dir, t0):
    episodes_by_task = {t: d.episodes for t, d in datasets.items()}
    rows = pretrain_alignment(
        coordinator, episodes_by_task, cfg, seed=seed,
        log=lambda r: say(f"align {r['step']:>5d} loss {r['loss']:.3f} "
                          f"acc {r['acc']:.3f}"))
    coordinator.freeze_perception()
    say(f"perception frozen after {time.time() - t0:.0f} s")
    _write_rows(Path(out_dir) / "align.csv", rows)
    return rows


def _joint(cfg, coordinator, datasets, caches, seed, say, out_dir, t0):
    variant = cfg.train.variant
    trainer = JointTrainer(cfg, coordinator, datasets, caches, seed=seed)
    rows = trainer.train(
        log=lambda r: say(f"joint {r['step']:>5d} arm {r['l_arm']:.3f} "
                          f"base {r['l_base']:.3f} coord {r['l_coord']:.3f}"))
    path = bundle_path(out_dir, variant)
    save_bundle(path, trainer, extra_meta={"seed": seed,
                                           "train_seconds": time.time() - t0})
    _write_rows(Path(out_dir) / f"{variant}_joint.csv", rows)
    say(f"bundle written to {path} after {time.time() - t0:.0f} s")
    return path


def train_variant(cfg: RunConfig, demos_dir, out_dir, seed: int = 0,
                  quiet: bool = False,
                  tasks: tuple = ("task1", "task2")) -> Path:
    """Train cfg.train.variant from recorded demos; returns the bundle path."""
    t0 = time.time()
    variant = cfg.train.variant
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    def say(msg):
        if not quiet:
            print(f"[{variant}] {msg}", flush=True)

    datasets = _load_datasets(cfg, demos_dir, tasks)
    say(f"loaded demos { {t: len(d.episodes) for t, d in datasets.items()} }, "
        f"{ {t: len(d) for t, d in datasets.items()} } windows")
    coordinator = _new_coordinator(cfg, seed)
    _align_and_freeze(cfg, coordinator, datasets, seed, say, out_dir, t0)
    caches = {t: build_frame_cache(coordinator, d.episodes)
              for t, d in datasets.items()}
    say(f"frame cache built at {time.time() - t0:.0f} s")
    return _joint(cfg, coordinator, datasets, caches, seed, say, out_dir, t0)


def train_all(cfg: RunConfig, demos_dir, out_dir, variants: tuple = VARIANTS,
              seed: int = 0, quiet: bool = False,
              tasks: tuple = ("task1", "task2")) -> dict:
    """Train several variants off one shared perception stage.

    Alignment pretraining and the frame cache are variant-independent, so
    they run once; each variant then gets a fresh fusion stack and policy
    pair. Returns {variant: bundle path}.
    """
    t0 = time.time()
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    def say(msg):
        if not quiet:
            print(f"[shared] {msg}", flush=True)

    datasets = _load_datasets(cfg, demos_dir, tasks)
    say(f"loaded demos { {t: len(d.episodes) for t, d in datasets.items()} }")
    reference = _new_coordinator(cfg, seed)
    _align_and_freeze(cfg, reference, datasets, seed, say, out_dir, t0)
    caches = {t: build_frame_cache(reference, d.episodes)
              for t, d in datasets.items()}
    say(f"frame cache built at {time.time() - t0:.0f} s")
    perception = {"image": reference.image.state_dict(),
                  "text": reference.text.state_dict()}

    paths = {}
    for variant in variants:
        cfg.train.variant = variant

        def vsay(msg, _v=variant):
            if not quiet:
                print(f"[{_v}] {msg}", flush=True)

        coordinator = _new_coordinator(cfg, seed)
        coordinator.image.load_state_dict(perception["image"])
        coordinator.text.load_state_dict(perception["text"])
        coordinator.freeze_perception()
        coordinator.refresh_prompts()
        paths[variant] = _joint(cfg, coordinator, datasets, caches, seed,
                                vsay, out_dir, t0)
    return paths
