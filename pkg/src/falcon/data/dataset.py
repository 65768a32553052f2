"""Windowing recorded episodes into policy training samples.

A sample at offset s pairs the observation window [s, s + t_obs) with the
action chunk starting at the window's last tick, [s + t_obs - 1,
s + t_obs - 1 + horizon). Executing chunk step 0 at the tick it was
planned from therefore reproduces the demonstrated action.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..config import RunConfig
from .episode import Episode, load_episode

__all__ = ["WindowIndex", "window_count", "window_slices", "ChunkDataset"]


def window_count(n_ticks: int, t_obs: int, horizon: int) -> int:
    """Number of valid samples in an episode of ``n_ticks`` rows."""
    return max(0, n_ticks - horizon - t_obs + 2)


def window_slices(s: int, t_obs: int, horizon: int) -> tuple:
    """(obs_slice, chunk_slice) for sample offset ``s``."""
    last = s + t_obs - 1
    return slice(s, s + t_obs), slice(last, last + horizon)


@dataclass
class WindowIndex:
    episode: int
    offset: int


class ChunkDataset:
    """All episodes of one task held in memory with a flat sample index."""

    def __init__(self, episodes: list, cfg: RunConfig):
        if not episodes:
            raise ValueError("no episodes given")
        self.cfg = cfg
        self.episodes = episodes
        self.task_id = episodes[0].task_id
        t_obs, horizon = cfg.policy.t_obs, cfg.policy.horizon
        self.index: list = []
        for e_i, ep in enumerate(episodes):
            for s in range(window_count(len(ep), t_obs, horizon)):
                self.index.append(WindowIndex(e_i, s))
        if not self.index:
            raise ValueError("episodes too short for one sample window")

    @classmethod
    def from_dir(cls, path, cfg: RunConfig) -> "ChunkDataset":
        files = sorted(Path(path).glob("*.ep"))
        if not files:
            raise FileNotFoundError(f"no .ep files under {path}")
        return cls([load_episode(f) for f in files], cfg)

    def __len__(self) -> int:
        return len(self.index)

    def sample_rows(self, idx) -> dict:
        """Gather one sample; returns raw numpy rows (no embedding work)."""
        w = self.index[idx]
        ep = self.episodes[w.episode]
        t_obs, horizon = self.cfg.policy.t_obs, self.cfg.policy.horizon
        obs_sl, chunk_sl = window_slices(w.offset, t_obs, horizon)
        return {
            "episode": w.episode,
            "obs_ticks": np.arange(obs_sl.start, obs_sl.stop),
            "views": ep.views[obs_sl],
            "proprio": ep.proprio[obs_sl],
            "arm_chunk": ep.arm_actions[chunk_sl],
            "base_chunk": ep.base_actions[chunk_sl],
        }

    def action_matrix(self) -> tuple:
        """Stacked (arm, base) actions across all ticks, for normalizers."""
        arm = np.concatenate([ep.arm_actions for ep in self.episodes])
        base = np.concatenate([ep.base_actions for ep in self.episodes])
        return arm, base
