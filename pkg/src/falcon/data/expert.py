"""Scripted demonstration experts.

Privileged finite-state machines that solve both tasks with smooth
proportional control, used to record training demonstrations and as the
success ceiling in evaluation. Commands carry small bounded noise so the
dataset covers a neighborhood of the nominal trajectories.
"""

from __future__ import annotations

import math

import numpy as np

from ..config import RunConfig
from ..tasks import TASKS
from ..world import kinematics as kin
from ..world.sim import (MANIP_TARGET_YAW, drawer_front_y, handle_position,
                         toy_rest_in_drawer)
from ..world.types import Attachment, WorldState, wrap_angle

__all__ = ["ScriptedExpert", "MANIP_POINT"]

MANIP_POINT = (2.5, 2.62)     # nominal manipulation pose in front of the cabinet
CREEP_Y = 2.88                # base creep depth for far cabinet-top reaches
CREEP_PITCH = 0.35            # forward lean extending the arm mount
ARM_HOME = (0.21, 0.0)        # retracted end-effector target in the base frame
POS_TOL = 0.05
YAW_TOL = 0.12
EE_TOL = 0.02


class ScriptedExpert:
    """Per-tick command source driving one episode of one task."""

    def __init__(self, cfg: RunConfig, task_id: str, seed: int = 0):
        if task_id not in TASKS:
            raise KeyError(f"unknown task {task_id!r}")
        self.cfg = cfg
        self.world = cfg.world
        self.params = cfg.expert
        self.task_id = task_id
        self.stages = TASKS[task_id].stages
        self.stage_idx = 0
        self.substage = "start"
        self.rng = np.random.default_rng(seed)
        self.settle = 0
        self.done = False

    # ------------------------------------------------------------- helpers

    def _drive(self, st: WorldState, tx: float, ty: float, tyaw: float,
               pitch: float = 0.0, creep: bool = False) -> np.ndarray:
        """Proportional base command toward a world waypoint."""
        p = self.params
        lim = self.world.limits
        ex, ey = tx - st.x, ty - st.y
        vx_w, vy_w = p.kp_nav * ex, p.kp_nav * ey
        c, s = math.cos(st.yaw), math.sin(st.yaw)
        vx = c * vx_w + s * vy_w
        vy = -s * vx_w + c * vy_w
        cap = 0.25 if creep else 0.8 * lim.v_max
        norm = math.hypot(vx, vy)
        if norm > cap:
            vx, vy = vx * cap / norm, vy * cap / norm
        wz = p.kp_yaw * wrap_angle(tyaw - st.yaw)
        vx += self.rng.normal(0.0, p.v_noise)
        vy += self.rng.normal(0.0, p.v_noise)
        return np.array([vx, vy, wz, pitch, lim.height_nominal])

    def _hold(self, pitch: float = 0.0) -> np.ndarray:
        return np.array([0.0, 0.0, 0.0, pitch, self.world.limits.height_nominal])

    def _arm_to_world(self, st: WorldState, wx: float, wy: float,
                      grip: float) -> np.ndarray:
        bx, by = kin.world_to_base(st.x, st.y, st.yaw, wx, wy)
        n = self.params.arm_noise
        return np.array([bx + self.rng.normal(0.0, n),
                         by + self.rng.normal(0.0, n), grip])

    def _arm_home(self, grip: float) -> np.ndarray:
        return np.array([ARM_HOME[0], ARM_HOME[1], grip])

    def _ee_world(self, st: WorldState) -> tuple:
        mount = kin.mount_offset(self.world.arm, self.world.limits, st.pitch,
                                 st.height)
        ex, ey = kin.fk(self.world.arm, st.q1, st.q2, mount)
        return kin.base_to_world(st.x, st.y, st.yaw, ex, ey)

    def _at_pose(self, st: WorldState, tx, ty, tol=POS_TOL) -> bool:
        return (math.hypot(st.x - tx, st.y - ty) <= tol
                and abs(wrap_angle(st.yaw - MANIP_TARGET_YAW)) <= YAW_TOL)

    def _ee_near(self, st: WorldState, wx, wy, tol=EE_TOL) -> bool:
        ex, ey = self._ee_world(st)
        return math.hypot(ex - wx, ey - wy) <= tol

    def _advance_stage(self) -> None:
        self.stage_idx += 1
        self.substage = "start"
        self.settle = 0
        if self.stage_idx >= len(self.stages):
            self.done = True

    # --------------------------------------------------------------- stages

    def __call__(self, st: WorldState) -> tuple:
        """Return (arm_cmd, base_cmd) for the current tick."""
        if self.done:
            grip = 1.0 if st.attachment == Attachment.GRASPED else 0.0
            return self._arm_home(grip), self._hold()
        stage = self.stages[self.stage_idx]
        handler = getattr(self, f"_stage_{stage}")
        arm, base = handler(st)
        return arm, base

    def _stage_navigate(self, st: WorldState) -> tuple:
        grip = 1.0 if st.attachment == Attachment.GRASPED else 0.0  # keep a held toy held
        tx, ty = MANIP_POINT
        if self._at_pose(st, tx, ty):
            self.settle += 1
            if self.settle >= self.params.settle_ticks:
                self._advance_stage()
            return self._arm_home(grip), self._hold()
        self.settle = 0
        return self._arm_home(grip), self._drive(st, tx, ty, MANIP_TARGET_YAW)

    def _stage_open_drawer(self, st: WorldState) -> tuple:
        w = self.world
        hx, hy = handle_position(w, st.drawer_fraction)
        if self.substage == "start":
            self.substage = "reach"
        if self.substage == "reach":
            if self._ee_near(st, hx, hy):
                self.substage = "grab"
            return self._arm_to_world(st, hx, hy, 0.0), self._hold()
        if self.substage == "grab":
            self.substage = "pull"
            return self._arm_to_world(st, hx, hy, 1.0), self._hold()
        if self.substage == "pull":
            if st.drawer_fraction >= 0.97:
                self.substage = "release"
                return self._arm_to_world(st, hx, hy, 0.0), self._hold()
            target_f = min(1.0, st.drawer_fraction + 0.12)
            ty = drawer_front_y(w, target_f) - w.scene.handle_depth
            return self._arm_to_world(st, hx, ty, 1.0), self._hold()
        # release and park the arm
        self.settle += 1
        if self.settle >= self.params.settle_ticks:
            self._advance_stage()
        return self._arm_home(0.0), self._hold()

    def _stage_pick_toy(self, st: WorldState) -> tuple:
        if self.substage == "start":
            self.substage = "creep"
        if self.substage == "creep":
            if (math.hypot(st.x - st.toy_x, st.y - CREEP_Y) <= 0.04
                    and st.pitch >= CREEP_PITCH - 0.05):
                self.substage = "reach"
            return (self._arm_home(0.0),
                    self._drive(st, st.toy_x, CREEP_Y, MANIP_TARGET_YAW,
                                pitch=CREEP_PITCH, creep=True))
        if self.substage == "reach":
            if self._ee_near(st, st.toy_x, st.toy_y):
                self.substage = "grasp"
            return (self._arm_to_world(st, st.toy_x, st.toy_y, 0.0),
                    self._hold(CREEP_PITCH))
        if self.substage == "grasp":
            if st.attachment == Attachment.GRASPED:
                self.substage = "retreat"
            return (self._arm_to_world(st, st.toy_x, st.toy_y, 1.0),
                    self._hold(CREEP_PITCH))
        # retreat to the manipulation pose carrying the toy
        tx, ty = MANIP_POINT
        if self._at_pose(st, tx, ty, tol=0.06):
            self.settle += 1
            if self.settle >= self.params.settle_ticks:
                self._advance_stage()
            return self._arm_home(1.0), self._hold()
        return self._arm_home(1.0), self._drive(st, tx, ty, MANIP_TARGET_YAW)

    def _stage_place_toy(self, st: WorldState) -> tuple:
        w = self.world
        rx, ry = toy_rest_in_drawer(w, st.drawer_fraction, 0.0)
        if self.substage == "start":
            self.substage = "reach"
        if self.substage == "reach":
            if self._ee_near(st, rx, ry):
                self.substage = "drop"
            return self._arm_to_world(st, rx, ry, 1.0), self._hold()
        if self.substage == "drop":
            if st.attachment == Attachment.IN_DRAWER:
                self.substage = "park"
            return self._arm_to_world(st, rx, ry, 0.0), self._hold()
        self.settle += 1
        if self.settle >= self.params.settle_ticks:
            self._advance_stage()
        return self._arm_home(0.0), self._hold()

    def _stage_close_drawer(self, st: WorldState) -> tuple:
        w = self.world
        hx, hy = handle_position(w, st.drawer_fraction)
        if self.substage == "start":
            self.substage = "reach"
        if self.substage == "reach":
            if self._ee_near(st, hx, hy):
                self.substage = "grab"
            return self._arm_to_world(st, hx, hy, 0.0), self._hold()
        if self.substage == "grab":
            self.substage = "push"
            return self._arm_to_world(st, hx, hy, 1.0), self._hold()
        if self.substage == "push":
            if st.drawer_fraction <= 0.03:
                self.substage = "release"
                return self._arm_to_world(st, hx, hy, 0.0), self._hold()
            target_f = max(0.0, st.drawer_fraction - 0.12)
            ty = drawer_front_y(w, target_f) - w.scene.handle_depth
            return self._arm_to_world(st, hx, ty, 1.0), self._hold()
        self.settle += 1
        if self.settle >= self.params.settle_ticks:
            self._advance_stage()
        return self._arm_home(0.0), self._hold()

    # ------------------------------------------------------------ progress

    def current_stage(self) -> str:
        if self.done:
            return "done"
        return self.stages[self.stage_idx]
