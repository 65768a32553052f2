"""Task registry: instructions, stage lists, phase prompt sets and the
ground-truth phase labeler used to supervise vision-language alignment.

Two long-horizon tasks share the same room:
  * ``task1``: walk to the cabinet, open the top drawer, pick the toy off
    the cabinet top, place it inside the drawer.
  * ``task2``: carry an already-grasped toy to the partially open drawer,
    place it inside, push the drawer shut.

Each task defines K phases. Every phase has an "ongoing" and a "done"
natural-language prompt (loaded from a structured YAML file, one per task),
giving 2K caption classes. ``phase_label`` maps a world state to the caption
that best describes it; these labels come from simulator ground truth and
stand in for internet-scale caption supervision when pretraining the
image/text encoders.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import yaml

from .config import WorldConfig
from .world import sim
from .world.types import WorldState, wrap_angle

__all__ = [
    "PhasePrompt", "TaskSpec", "load_prompt_set", "get_task", "TASKS",
    "phase_label", "ongoing_index", "done_index",
]


@dataclass(frozen=True)
class PhasePrompt:
    name: str
    ongoing: str
    done: str


@dataclass(frozen=True)
class TaskSpec:
    task_id: str
    instruction: str
    stages: tuple            # ordered stage names, success = all achieved
    phases: tuple            # K PhasePrompt entries


def ongoing_index(k: int) -> int:
    """Caption class index of phase k's ongoing prompt."""
    return 2 * k


def done_index(k: int) -> int:
    """Caption class index of phase k's done prompt."""
    return 2 * k + 1


def load_prompt_set(source) -> tuple:
    """Load a prompt set from a YAML file: {task, instruction, phases: [...]}.

    Returns (task_id, instruction, tuple of PhasePrompt).
    """
    if isinstance(source, Path) or (isinstance(source, str) and "\n" not in source):
        data = yaml.safe_load(Path(source).read_text())
    else:
        data = yaml.safe_load(source)
    phases = tuple(PhasePrompt(p["name"], p["ongoing"], p["done"]) for p in data["phases"])
    return data["task"], data["instruction"], phases


def _builtin(task_id: str):
    ref = resources.files("falcon.prompts") / f"{task_id}.yaml"
    return load_prompt_set(ref.read_text())


_T1_ID, _T1_INSTR, _T1_PHASES = _builtin("task1")
_T2_ID, _T2_INSTR, _T2_PHASES = _builtin("task2")

TASKS = {
    "task1": TaskSpec(
        task_id="task1",
        instruction=_T1_INSTR,
        stages=("navigate", "open_drawer", "pick_toy", "place_toy"),
        phases=_T1_PHASES,
    ),
    "task2": TaskSpec(
        task_id="task2",
        instruction=_T2_INSTR,
        stages=("navigate", "place_toy", "close_drawer"),
        phases=_T2_PHASES,
    ),
}


def get_task(task_id: str) -> TaskSpec:
    try:
        return TASKS[task_id]
    except KeyError:
        raise ValueError(f"unknown task {task_id!r}") from None


def _dist_to_manip(cfg: WorldConfig, state: WorldState) -> float:
    sc = cfg.scene
    return math.hypot(state.x - sc.manip_cx, state.y - sc.manip_cy)


def _ee_world(cfg: WorldConfig, state: WorldState):
    from .world import kinematics as kin
    return kin.ee_world(cfg.arm, cfg.limits, state.x, state.y, state.yaw,
                        state.pitch, state.height, state.q1, state.q2)


def kin_mount(cfg: WorldConfig, state: WorldState) -> float:
    from .world import kinematics as kin
    return kin.mount_offset(cfg.arm, cfg.limits, state.pitch, state.height)


def _fk_base(cfg: WorldConfig, state: WorldState, mount: float):
    from .world import kinematics as kin
    return kin.fk(cfg.arm, state.q1, state.q2, mount)


def phase_label(cfg: WorldConfig, state: WorldState) -> int:
    """Caption class (0..2K-1) describing the state, from ground truth."""
    pred = sim.predicates(cfg, state)
    d = _dist_to_manip(cfg, state)
    ex, ey = _ee_world(cfg, state)
    if state.task_id == "task1":
        # phases: approach(0) open(1) pick(2) place(3)
        if pred["toy_in_drawer"]:
            return done_index(3)
        if pred["toy_grasped"]:
            cav = sim.drawer_cavity(cfg, state.drawer_fraction)
            tx, ty = (cav[0] + cav[1]) / 2.0, (cav[2] + cav[3]) / 2.0
            near_drop = math.hypot(ex - tx, ey - ty) <= 0.22
            return ongoing_index(3) if near_drop else done_index(2)
        if pred["drawer_open"]:
            near_toy = math.hypot(ex - state.toy_x, ey - state.toy_y) <= 0.3
            return ongoing_index(2) if near_toy else done_index(1)
        if pred["at_manip_pose"]:
            return ongoing_index(1) if state.drawer_fraction > 0.05 else done_index(0)
        return ongoing_index(0)
    else:
        # phases: move(0) align(1) place(2) close(3)
        if pred["toy_in_drawer"]:
            if pred["drawer_closed"]:
                return done_index(3)
            # gripper closed with the toy already inside means the hand is
            # on the handle working the drawer shut
            return ongoing_index(3) if state.gripper_closed else done_index(2)
        if pred["at_manip_pose"]:
            # reaching into the drawer reads as arm extension in the base
            # frame; the parked pose stays well under the threshold
            mount = kin_mount(cfg, state)
            bx, by = _fk_base(cfg, state, mount)
            extending = math.hypot(bx, by) >= 0.25
            return ongoing_index(2) if extending else done_index(1)
        if d <= 0.85:
            return ongoing_index(1)
        if d <= 1.3:
            return done_index(0)
        return ongoing_index(0)


def stage_predicate(task_id: str, stage: str, preds: dict) -> bool:
    """Whether a named stage's completion condition currently holds."""
    if stage == "navigate":
        return preds["at_manip_pose"]
    if stage == "open_drawer":
        return preds["drawer_open"]
    if stage == "pick_toy":
        return preds["toy_grasped"] or preds["toy_in_drawer"]
    if stage == "place_toy":
        return preds["toy_in_drawer"]
    if stage == "close_drawer":
        return preds["toy_in_drawer"] and preds["drawer_closed"]
    raise ValueError(f"unknown stage {stage!r} for {task_id}")
