"""Demonstration pipeline: scripted experts, episode files, windowing."""

from .collect import collect_demos, episode_path
from .dataset import ChunkDataset, window_count, window_slices
from .episode import (Episode, load_episode, run_expert_episode,
                      save_episode)
from .expert import ScriptedExpert

__all__ = [
    "collect_demos", "episode_path", "ChunkDataset", "window_count",
    "window_slices", "Episode", "load_episode", "run_expert_episode",
    "save_episode", "ScriptedExpert",
]
