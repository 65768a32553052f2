"""Demonstration collection: seeded, idempotent, one file per episode."""

from __future__ import annotations

import json
from pathlib import Path

from ..config import RunConfig, config_hash
from .episode import run_expert_episode, save_episode

__all__ = ["collect_demos", "episode_path"]


def episode_path(out_dir, task_id: str, seed: int) -> Path:
    return Path(out_dir) / task_id / f"{seed:05d}.ep"


def collect_demos(cfg: RunConfig, task_id: str, out_dir, n_episodes: int,
                  seed0: int = 0, region: str = "cycle", force: bool = False,
                  tracker=None, progress=None) -> list:
    """Record ``n_episodes`` expert demos; skips files that already exist.

    ``region`` may name one spawn region or be "cycle" to rotate through
    all of them by seed. Returns the list of episode paths. A manifest.json
    beside them records the config fingerprint and per-episode outcomes.
    """
    root = Path(out_dir) / task_id
    root.mkdir(parents=True, exist_ok=True)
    fingerprint = config_hash(cfg)
    manifest_path = root / "manifest.json"
    entries = {}
    if manifest_path.exists() and not force:
        entries = {e["seed"]: e
                   for e in json.loads(manifest_path.read_text())["episodes"]}
    paths = []
    for i in range(n_episodes):
        seed = seed0 + i
        if region == "cycle":
            ep_region = cfg.eval.regions[seed % len(cfg.eval.regions)]
        else:
            ep_region = region
        path = episode_path(out_dir, task_id, seed)
        paths.append(path)
        if path.exists() and not force and seed in entries:
            continue
        ep = run_expert_episode(cfg, task_id, ep_region, seed, tracker=tracker)
        save_episode(path, ep)
        entries[seed] = {"seed": seed, "file": path.name, "ticks": len(ep),
                        "region": ep_region, "success": bool(ep.success)}
        if progress is not None:
            progress(seed, ep)
    manifest = {"task": task_id, "config": fingerprint,
                "episodes": sorted(entries.values(), key=lambda e: e["seed"])}
    manifest_path.write_text(json.dumps(manifest, indent=2))
    return paths
