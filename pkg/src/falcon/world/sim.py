"""Planar world simulator: quadruped base, mounted arm, cabinet with one
interactive top drawer, and a toy.

The world advances at 50 Hz (``WorldConfig.dt``). Within one step the base
pose integrates at 200 Hz and the arm joints at 100 Hz; high-level policies
act every ``hl_every`` steps (10 Hz). Commanded base velocities pass through
a swappable tracking layer (ideal by default; analytic or learned low-level
controllers implement the same interface).

Interaction rules are deliberately simple and exact:
  * closing the gripper within ``capture_radius`` of the toy grasps it;
  * while the gripper is closed on the drawer handle, the drawer fraction
    follows the hand along the slide axis, clamped to [0, 1];
  * opening the gripper over the open drawer cavity drops the toy inside;
    over the cabinet top it rests there; elsewhere it falls free.
"""

from __future__ import annotations

import math

import numpy as np

from ..config import WorldConfig
from . import kinematics as kin
from .types import Attachment, WorldState, wrap_angle, PROPRIO_DIM

__all__ = [
    "IdealTracker",
    "reset_task",
    "step",
    "hl_tick",
    "predicates",
    "proprio_vector",
    "drawer_front_y",
    "handle_position",
    "drawer_cavity",
    "clamp_base_command",
    "in_cabinet_footprint",
    "manip_target_yaw",
    "TASK_IDS",
]

TASK_IDS = ("task1", "task2")

MANIP_TARGET_YAW = math.pi / 2.0  # base faces the cabinet (+y)


def manip_target_yaw() -> float:
    return MANIP_TARGET_YAW


class IdealTracker:
    """Perfect velocity tracking with rate-limited posture DOFs."""

    def reset(self) -> None:
        pass

    def track(self, cfg: WorldConfig, state: WorldState, cmd, dt: float):
        lim = cfg.limits
        noise = cfg.noise
        vx, vy, wz = cmd[0], cmd[1], cmd[2]
        if noise.v_std > 0.0:
            vx += state.rng.normal(0.0, noise.v_std)
            vy += state.rng.normal(0.0, noise.v_std)
        if noise.wz_std > 0.0:
            wz += state.rng.normal(0.0, noise.wz_std)
        dp = lim.pitch_rate * dt
        dh = lim.height_rate * dt
        pitch = state.pitch + min(dp, max(-dp, cmd[3] - state.pitch))
        height = state.height + min(dh, max(-dh, cmd[4] - state.height))
        if noise.pose_std > 0.0:
            pitch += state.rng.normal(0.0, noise.pose_std)
            height += state.rng.normal(0.0, noise.pose_std)
        pitch = min(lim.pitch_max, max(lim.pitch_min, pitch))
        height = min(lim.height_max, max(lim.height_min, height))
        return vx, vy, wz, height, pitch


def clamp_base_command(cfg: WorldConfig, cmd) -> tuple:
    lim = cfg.limits
    return (
        min(lim.v_max, max(-lim.v_max, float(cmd[0]))),
        min(lim.v_max, max(-lim.v_max, float(cmd[1]))),
        min(lim.wz_max, max(-lim.wz_max, float(cmd[2]))),
        min(lim.pitch_max, max(lim.pitch_min, float(cmd[3]))),
        min(lim.height_max, max(lim.height_min, float(cmd[4]))),
    )


def drawer_front_y(cfg: WorldConfig, fraction: float) -> float:
    sc = cfg.scene
    return sc.cabinet_cy - sc.cabinet_hy - sc.drawer_travel * fraction


def handle_position(cfg: WorldConfig, fraction: float) -> tuple:
    sc = cfg.scene
    return (sc.cabinet_cx, drawer_front_y(cfg, fraction) - sc.handle_depth)


def drawer_cavity(cfg: WorldConfig, fraction: float) -> tuple:
    """Open cavity rect (x_lo, x_hi, y_lo, y_hi) the toy can drop into."""
    sc = cfg.scene
    front = drawer_front_y(cfg, fraction)
    cab_front = sc.cabinet_cy - sc.cabinet_hy
    half = sc.drawer_w / 2.0 - 0.05
    return (sc.cabinet_cx - half, sc.cabinet_cx + half, front + 0.03, cab_front - 0.01)


def toy_rest_in_drawer(cfg: WorldConfig, fraction: float, slot: float) -> tuple:
    return (cfg.scene.cabinet_cx + slot, drawer_front_y(cfg, fraction) + 0.08)


def in_cabinet_footprint(cfg: WorldConfig, px: float, py: float, margin: float = 0.0) -> bool:
    sc = cfg.scene
    return (abs(px - sc.cabinet_cx) <= sc.cabinet_hx + margin
            and abs(py - sc.cabinet_cy) <= sc.cabinet_hy + margin)


def _ee_world(cfg: WorldConfig, state: WorldState) -> tuple:
    return kin.ee_world(cfg.arm, cfg.limits, state.x, state.y, state.yaw,
                        state.pitch, state.height, state.q1, state.q2)


def reset_task(cfg: WorldConfig, task_id: str, region: str = "center",
               seed: int = 0) -> WorldState:
    """Sample a fresh episode start for ``task_id`` in a named start region."""
    if task_id not in TASK_IDS:
        raise ValueError(f"unknown task {task_id!r}")
    sc = cfg.scene
    rng = np.random.default_rng(seed)
    rect = sc.region(region)
    x = float(rng.uniform(rect[0], rect[1]))
    y = float(rng.uniform(rect[2], rect[3]))
    yaw = float(rng.uniform(-math.pi, math.pi))
    state = WorldState(
        task_id=task_id, x=x, y=y, yaw=yaw,
        height=cfg.limits.height_nominal, pitch=0.0,
        region=region, seed=seed, rng=rng,
    )
    # arm home: straight ahead at mid reach
    mount = kin.mount_offset(cfg.arm, cfg.limits, state.pitch, state.height)
    home_r = 0.55 * (cfg.arm.l1 + cfg.arm.l2)
    q1, q2, _ = kin.ik(cfg.arm, mount + home_r, 0.0, mount)
    state.q1, state.q2 = q1, q2
    if task_id == "task1":
        state.drawer_fraction = 0.0
        state.gripper_closed = False
        state.attachment = Attachment.ON_CABINET
        lat = float(rng.uniform(-sc.toy_lateral_range, sc.toy_lateral_range))
        state.toy_x = sc.cabinet_cx + lat
        state.toy_y = sc.cabinet_cy - sc.cabinet_hy + 0.06
    else:
        state.drawer_fraction = 0.5 if int(rng.integers(0, 2)) == 0 else 1.0
        state.gripper_closed = True
        state.attachment = Attachment.GRASPED
        state.toy_x, state.toy_y = _ee_world(cfg, state)
    return state


def _integrate_base(cfg: WorldConfig, st: WorldState, vx, vy, wz, dt: float) -> None:
    n = cfg.base_substeps
    h = dt / n
    x, y, yaw = st.x, st.y, st.yaw
    for _ in range(n):
        c, s = math.cos(yaw), math.sin(yaw)
        x += (c * vx - s * vy) * h
        y += (s * vx + c * vy) * h
        yaw = wrap_angle(yaw + wz * h)
    sc = cfg.scene
    r = sc.base_radius
    x = min(sc.room_w - r, max(r, x))
    y = min(sc.room_h - r, max(r, y))
    # keep the base center out of the cabinet footprint (expanded by its radius)
    ex, ey = sc.cabinet_hx + r, sc.cabinet_hy + r
    dx, dy = x - sc.cabinet_cx, y - sc.cabinet_cy
    if abs(dx) < ex and abs(dy) < ey:
        push_x = ex - abs(dx)
        push_y = ey - abs(dy)
        if push_x < push_y:
            x = sc.cabinet_cx + (ex if dx >= 0 else -ex)
        else:
            y = sc.cabinet_cy + (ey if dy >= 0 else -ey)
    st.x, st.y, st.yaw = x, y, yaw
    st.vx, st.vy, st.wz = vx, vy, wz


def _move_arm(cfg: WorldConfig, st: WorldState, arm_cmd, dt: float) -> None:
    mount = kin.mount_offset(cfg.arm, cfg.limits, st.pitch, st.height)
    tx, ty, clamped = kin.clamp_target(cfg.arm, float(arm_cmd[0]), float(arm_cmd[1]), mount)
    q1_d, q2_d, _ = kin.ik(cfg.arm, tx, ty, mount)
    st.ik_clamped = clamped
    n = cfg.arm_substeps
    h = dt / n
    max_dq = cfg.arm.joint_rate * h
    q1, q2 = st.q1, st.q2
    for _ in range(n):
        q1 += min(max_dq, max(-max_dq, q1_d - q1))
        q2 += min(max_dq, max(-max_dq, q2_d - q2))
    st.q1, st.q2 = q1, q2


def _interact(cfg: WorldConfig, st: WorldState, want_closed: bool) -> None:
    sc = cfg.scene
    ex, ey = _ee_world(cfg, st)
    was_closed = st.gripper_closed
    st.gripper_closed = want_closed

    if want_closed and not was_closed:
        # grasp attempt: toy first, then nothing else to latch onto
        if st.attachment in (Attachment.FREE, Attachment.ON_CABINET):
            if math.hypot(ex - st.toy_x, ey - st.toy_y) <= sc.capture_radius:
                st.attachment = Attachment.GRASPED
        elif st.attachment == Attachment.IN_DRAWER:
            if (st.drawer_fraction >= sc.drop_min_fraction
                    and math.hypot(ex - st.toy_x, ey - st.toy_y) <= sc.capture_radius):
                st.attachment = Attachment.GRASPED

    if not want_closed and was_closed and st.attachment == Attachment.GRASPED:
        # release: where the toy ends up depends on what is underneath
        cav = drawer_cavity(cfg, st.drawer_fraction)
        if (st.drawer_fraction >= sc.drop_min_fraction
                and cav[0] <= ex <= cav[1] and cav[2] <= ey <= cav[3]):
            st.attachment = Attachment.IN_DRAWER
            half = sc.drawer_w / 2.0 - 0.07
            st.toy_slot = min(half, max(-half, ex - sc.cabinet_cx))
        elif in_cabinet_footprint(cfg, ex, ey):
            st.attachment = Attachment.ON_CABINET
            st.toy_x, st.toy_y = ex, ey
        else:
            st.attachment = Attachment.FREE
            st.toy_x, st.toy_y = ex, ey

    # drawer follows a closed hand on the handle
    if st.gripper_closed and st.attachment != Attachment.GRASPED:
        hx, hy = handle_position(cfg, st.drawer_fraction)
        if math.hypot(ex - hx, ey - hy) <= sc.capture_radius:
            home = sc.cabinet_cy - sc.cabinet_hy - sc.handle_depth
            st.drawer_fraction = min(1.0, max(0.0, (home - ey) / sc.drawer_travel))

    # object poses track their attachment
    if st.attachment == Attachment.GRASPED:
        st.toy_x, st.toy_y = ex, ey
    elif st.attachment == Attachment.IN_DRAWER:
        st.toy_x, st.toy_y = toy_rest_in_drawer(cfg, st.drawer_fraction, st.toy_slot)


def step(cfg: WorldConfig, state: WorldState, arm_cmd, base_cmd,
         tracker=None) -> WorldState:
    """Advance one 50 Hz world step. Returns a new state.

    arm_cmd: (ee_x, ee_y, gripper) in the base frame, gripper in [0, 1].
    base_cmd: (vx, vy, wz, pitch_cmd, height_cmd), velocities body-frame.
    """
    st = state.copy()
    cmd = clamp_base_command(cfg, base_cmd)
    if tracker is None:
        tracker = _DEFAULT_TRACKER
    vx, vy, wz, height, pitch = tracker.track(cfg, st, cmd, cfg.dt)
    st.height, st.pitch = height, pitch
    _integrate_base(cfg, st, vx, vy, wz, cfg.dt)
    _move_arm(cfg, st, arm_cmd, cfg.dt)
    _interact(cfg, st, float(arm_cmd[2]) > cfg.arm.gripper_threshold)
    st.sim_time += cfg.dt
    return st


def hl_tick(cfg: WorldConfig, state: WorldState, arm_cmd, base_cmd,
            tracker=None) -> WorldState:
    """Advance one high-level tick (``hl_every`` world steps, 10 Hz)."""
    st = state
    for _ in range(cfg.hl_every):
        st = step(cfg, st, arm_cmd, base_cmd, tracker)
    st.tick = state.tick + 1
    return st


_DEFAULT_TRACKER = IdealTracker()


def proprio_vector(cfg: WorldConfig, state: WorldState) -> np.ndarray:
    """Proprioception exposed to policies (no privileged object state)."""
    mount = kin.mount_offset(cfg.arm, cfg.limits, state.pitch, state.height)
    ex, ey = kin.fk(cfg.arm, state.q1, state.q2, mount)
    out = np.empty(PROPRIO_DIM, dtype=np.float64)
    out[0] = state.x
    out[1] = state.y
    out[2] = math.cos(state.yaw)
    out[3] = math.sin(state.yaw)
    out[4] = state.height
    out[5] = state.pitch
    out[6] = state.vx
    out[7] = state.vy
    out[8] = state.wz
    out[9] = state.q1
    out[10] = state.q2
    out[11] = ex
    out[12] = ey
    out[13] = 1.0 if state.gripper_closed else 0.0
    return out


def predicates(cfg: WorldConfig, state: WorldState) -> dict:
    """Ground-truth event predicates used by stage detectors and labelers."""
    sc = cfg.scene
    at_pose = (abs(state.x - sc.manip_cx) <= sc.manip_hx
               and abs(state.y - sc.manip_cy) <= sc.manip_hy
               and abs(wrap_angle(state.yaw - MANIP_TARGET_YAW)) <= sc.manip_yaw_tol)
    return {
        "at_manip_pose": at_pose,
        "drawer_open": state.drawer_fraction >= 0.9,
        "drawer_closed": state.drawer_fraction <= 0.05,
        "toy_grasped": state.attachment == Attachment.GRASPED,
        "toy_in_drawer": state.attachment == Attachment.IN_DRAWER,
        "toy_on_cabinet": state.attachment == Attachment.ON_CABINET,
    }
