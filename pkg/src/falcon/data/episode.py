"""Episode recording: one high-level-tick-aligned trajectory per file.

Rows are aligned so that action[t] is the command issued after seeing
observation[t]; downstream windowing relies on this. Camera rasters are
zlib-compressed inside the chunk container since they are flat-shaded and
compress around 50x.
"""

from __future__ import annotations

import zlib
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..chunkfile import ChunkReader, ChunkWriter
from ..config import RunConfig, config_hash
from ..tasks import TASKS, phase_label, stage_predicate
from ..world import observe, reset_task
from ..world.sim import hl_tick, predicates
from ..world.types import WorldState

__all__ = ["Episode", "save_episode", "load_episode", "run_expert_episode",
           "EPISODE_KIND", "EPISODE_VERSION", "VIEW_ORDER", "PRIVILEGED_FIELDS"]

EPISODE_KIND = "episode"
EPISODE_VERSION = 1
VIEW_ORDER = ("wrist", "body", "head")
PRIVILEGED_FIELDS = ("x", "y", "yaw", "height", "pitch", "drawer_fraction",
                     "toy_x", "toy_y", "attachment")
PREDICATE_NAMES = ("at_manip_pose", "drawer_open", "drawer_closed",
                   "toy_grasped", "toy_in_drawer", "toy_on_cabinet")


@dataclass
class Episode:
    task_id: str
    region: str
    seed: int
    instruction: str
    config_fingerprint: str
    views: np.ndarray         # (T, 3, R, R, 3) uint8, view order = VIEW_ORDER
    proprio: np.ndarray       # (T, 14) float32
    arm_actions: np.ndarray   # (T, 3) float32
    base_actions: np.ndarray  # (T, 5) float32
    sim_time: np.ndarray      # (T,) float64
    stage_idx: np.ndarray     # (T,) int16 expert stage pointer
    phase_labels: np.ndarray  # (T,) int16 caption class per tick
    predicate_rows: np.ndarray  # (T, len(PREDICATE_NAMES)) uint8
    privileged: np.ndarray    # (T, len(PRIVILEGED_FIELDS)) float32
    success: bool = True
    extra: dict = field(default_factory=dict)

    def __len__(self) -> int:
        return self.views.shape[0]


def save_episode(path, ep: Episode) -> None:
    meta = {
        "task": ep.task_id, "region": ep.region, "seed": ep.seed,
        "instruction": ep.instruction, "config": ep.config_fingerprint,
        "n_ticks": len(ep), "success": bool(ep.success),
        "views_shape": list(ep.views.shape),
        "predicate_names": list(PREDICATE_NAMES),
        "privileged_fields": list(PRIVILEGED_FIELDS),
    }
    meta.update(ep.extra)
    with ChunkWriter(path, kind=EPISODE_KIND, version=EPISODE_VERSION,
                     meta=meta) as w:
        w.add("views_zlib", zlib.compress(np.ascontiguousarray(ep.views).tobytes(), 6))
        w.add_array("proprio", ep.proprio.astype(np.float32))
        w.add_array("arm_actions", ep.arm_actions.astype(np.float32))
        w.add_array("base_actions", ep.base_actions.astype(np.float32))
        w.add_array("sim_time", ep.sim_time.astype(np.float64))
        w.add_array("stage_idx", ep.stage_idx.astype(np.int16))
        w.add_array("phase_labels", ep.phase_labels.astype(np.int16))
        w.add_array("predicates", ep.predicate_rows.astype(np.uint8))
        w.add_array("privileged", ep.privileged.astype(np.float32))


def load_episode(path) -> Episode:
    r = ChunkReader(path, expect_kind=EPISODE_KIND)
    if r.version != EPISODE_VERSION:
        raise IOError(f"{path}: unsupported episode version {r.version}")
    meta = dict(r.meta)
    shape = tuple(meta.pop("views_shape"))
    views = np.frombuffer(zlib.decompress(r.raw("views_zlib")),
                          dtype=np.uint8).reshape(shape)
    known = {"task", "region", "seed", "instruction", "config", "n_ticks",
             "success", "predicate_names", "privileged_fields"}
    extra = {k: v for k, v in meta.items() if k not in known}
    return Episode(
        task_id=meta["task"], region=meta["region"], seed=int(meta["seed"]),
        instruction=meta["instruction"], config_fingerprint=meta["config"],
        views=views, proprio=r.array("proprio"),
        arm_actions=r.array("arm_actions"),
        base_actions=r.array("base_actions"), sim_time=r.array("sim_time"),
        stage_idx=r.array("stage_idx"), phase_labels=r.array("phase_labels"),
        predicate_rows=r.array("predicates"), privileged=r.array("privileged"),
        success=bool(meta["success"]), extra=extra,
    )


def _privileged_row(st: WorldState) -> list:
    return [st.x, st.y, st.yaw, st.height, st.pitch, st.drawer_fraction,
            st.toy_x, st.toy_y, float(int(st.attachment))]


def run_expert_episode(cfg: RunConfig, task_id: str, region: str, seed: int,
                       tracker=None, max_ticks: int = 300) -> Episode:
    """Roll the scripted expert once and record every tick."""
    from .expert import ScriptedExpert

    state = reset_task(cfg.world, task_id, region, seed=seed)
    expert = ScriptedExpert(cfg, task_id, seed=seed + 77_000)
    instruction = TASKS[task_id].instruction
    rows: dict = {k: [] for k in ("views", "proprio", "arm", "base", "time",
                                  "stage", "phase", "pred", "priv")}
    for _ in range(max_ticks):
        if expert.done:
            break
        obs = observe(cfg.world, state, instruction)
        arm, base = expert(state)
        # quantize commands before stepping so the log IS what was executed
        arm = np.asarray(arm, dtype=np.float32)
        base = np.asarray(base, dtype=np.float32)
        rows["views"].append(np.stack([obs.views[v] for v in VIEW_ORDER]))
        rows["proprio"].append(obs.proprio.astype(np.float32))
        rows["arm"].append(arm)
        rows["base"].append(base)
        rows["time"].append(state.sim_time)
        rows["stage"].append(expert.stage_idx if not expert.done
                             else len(expert.stages))
        rows["phase"].append(phase_label(cfg.world, state))
        preds = predicates(cfg.world, state)
        rows["pred"].append([int(preds[n]) for n in PREDICATE_NAMES])
        rows["priv"].append(_privileged_row(state))
        state = hl_tick(cfg.world, state, arm, base)
    final = predicates(cfg.world, state)
    success = all(stage_predicate(task_id, s, final)
                  for s in TASKS[task_id].stages[1:])
    return Episode(
        task_id=task_id, region=region, seed=seed, instruction=instruction,
        config_fingerprint=config_hash(cfg),
        views=np.stack(rows["views"]).astype(np.uint8),
        proprio=np.stack(rows["proprio"]),
        arm_actions=np.stack(rows["arm"]), base_actions=np.stack(rows["base"]),
        sim_time=np.asarray(rows["time"], dtype=np.float64),
        stage_idx=np.asarray(rows["stage"], dtype=np.int16),
        phase_labels=np.asarray(rows["phase"], dtype=np.int16),
        predicate_rows=np.asarray(rows["pred"], dtype=np.uint8),
        privileged=np.asarray(rows["priv"], dtype=np.float32),
        success=success,
    )
