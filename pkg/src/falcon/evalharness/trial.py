"""Single-trial execution with sequential stage gating.

A command source is polled once per high-level tick. Stages succeed in
task order: a stage's predicate only counts once every earlier stage has
been latched, and a latched stage never un-latches, so transient predicate
flicker cannot fake progress.
"""

from __future__ import annotations

from dataclasses import dataclass

from ..config import RunConfig
from ..tasks import TASKS, stage_predicate
from ..world import hl_tick, observe, predicates, reset_task

__all__ = ["TrialResult", "run_trial", "ExpertSource", "PolicySource",
           "MixedSource", "subsystem_success", "STAGE_SUBSYSTEM"]

# which subsystem a stage's success is attributed to in the
# human-in-the-loop scoring tables
STAGE_SUBSYSTEM = {
    "navigate": "base",
    "open_drawer": "arm",
    "pick_toy": "arm",
    "place_toy": "arm",
    "close_drawer": "arm",
}


@dataclass
class TrialResult:
    task_id: str
    region: str
    seed: int
    success: bool
    stages: dict            # stage name -> bool
    stage_ticks: dict       # stage name -> tick latched (or None)
    ticks_used: int
    mode: str = "auto"

    def to_json(self) -> dict:
        return {
            "task": self.task_id, "region": self.region, "seed": self.seed,
            "success": self.success, "stages": dict(self.stages),
            "stage_ticks": dict(self.stage_ticks),
            "ticks_used": self.ticks_used, "mode": self.mode,
        }


class ExpertSource:
    """Privileged scripted driver used for ceilings and teleop stand-ins."""

    def __init__(self, cfg: RunConfig, task_id: str, seed: int = 0):
        from ..data.expert import ScriptedExpert
        self._make = lambda s: ScriptedExpert(cfg, task_id, seed=s)
        self.expert = self._make(seed)

    def reset(self, seed: int) -> None:
        self.expert = self._make(seed)

    def commands(self, obs, state) -> tuple:
        return self.expert(state)


class PolicySource:
    """Trained policy bundle driver; sees only the observation."""

    def __init__(self, runner):
        self.runner = runner

    def reset(self, seed: int) -> None:
        self.runner.reset(seed=seed)

    def commands(self, obs, state) -> tuple:
        return self.runner(obs)


class MixedSource:
    """Route arm and base commands to different sources (teleop scoring)."""

    def __init__(self, arm_source, base_source):
        self.arm_source = arm_source
        self.base_source = base_source

    def reset(self, seed: int) -> None:
        self.arm_source.reset(seed)
        if self.base_source is not self.arm_source:
            self.base_source.reset(seed + 1)

    def commands(self, obs, state) -> tuple:
        arm, _ = self.arm_source.commands(obs, state)
        _, base = self.base_source.commands(obs, state)
        return arm, base


def run_trial(cfg: RunConfig, task_id: str, region: str, seed: int, source,
              tracker=None, step_limit: int | None = None,
              mode: str = "auto", on_tick=None) -> TrialResult:
    """Roll one episode and score stages sequentially."""
    limit = cfg.eval.step_limit if step_limit is None else step_limit
    spec = TASKS[task_id]
    state = reset_task(cfg.world, task_id, region, seed=seed)
    if hasattr(source, "reset"):
        source.reset(seed)
    latched = {s: False for s in spec.stages}
    stage_ticks = {s: None for s in spec.stages}
    tick = 0
    for tick in range(1, limit + 1):
        obs = observe(cfg.world, state, spec.instruction)
        arm, base = source.commands(obs, state)
        state = hl_tick(cfg.world, state, arm, base, tracker)
        preds = predicates(cfg.world, state)
        for k, stage in enumerate(spec.stages):
            if latched[stage]:
                continue
            if k > 0 and not latched[spec.stages[k - 1]]:
                break
            if stage_predicate(task_id, stage, preds):
                latched[stage] = True
                stage_ticks[stage] = tick
        if on_tick is not None:
            on_tick(tick, state, preds, latched)
        if all(latched.values()):
            break
    return TrialResult(
        task_id=task_id, region=region, seed=seed,
        success=all(latched.values()), stages=latched,
        stage_ticks=stage_ticks, ticks_used=tick, mode=mode,
    )


def subsystem_success(result: TrialResult) -> dict:
    """Per-subsystem stage success for the human-in-the-loop tables."""
    out = {"base": True, "arm": True}
    for stage, ok in result.stages.items():
        side = STAGE_SUBSYSTEM[stage]
        out[side] = out[side] and bool(ok)
    return out
