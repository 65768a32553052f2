"""World simulator: kinematics round-trips, integration oracles, interaction
rules, determinism and invariant fuzzing."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from falcon.config import default_config
from falcon.world import (
    Attachment, IdealTracker, clamp_base_command, hl_tick, observe,
    predicates, proprio_vector, render_views, reset_task, step,
)
from falcon.world import kinematics as kin
from falcon.world.sim import drawer_cavity, drawer_front_y, handle_position, in_cabinet_footprint
from falcon.world.types import wrap_angle

CFG = default_config().world


def _drive_arm(cfg, state, target_world, gripper, steps=80):
    for _ in range(steps):
        tb = kin.world_to_base(state.x, state.y, state.yaw, *target_world)
        state = step(cfg, state, (tb[0], tb[1], gripper),
                     (0.0, 0.0, 0.0, state.pitch, state.height))
    return state


def _state_at_manip_pose(task_id="task1", seed=0):
    st = reset_task(CFG, task_id, "center", seed)
    st.x, st.y, st.yaw = CFG.scene.manip_cx, CFG.scene.manip_cy, math.pi / 2
    if task_id == "task2":
        # keep the grasped toy consistent with the new pose
        st = step(CFG, st, (0.3, 0.0, 1.0), (0, 0, 0, st.pitch, st.height))
    return st


# ---------------------------------------------------------------- kinematics

def test_fk_ik_round_trip_many_targets():
    arm = CFG.arm
    rng = np.random.default_rng(7)
    r_lo, r_hi = kin.reach_interval(arm)
    n = 10_000
    radii = rng.uniform(r_lo + 1e-6, r_hi - 1e-6, n)
    angles = rng.uniform(-math.pi, math.pi, n)
    mounts = rng.uniform(-0.1, 0.3, n)
    worst = 0.0
    for r, a, m in zip(radii, angles, mounts):
        tx, ty = m + r * math.cos(a), r * math.sin(a)
        q1, q2, ok = kin.ik(arm, tx, ty, m)
        assert ok
        fx, fy = kin.fk(arm, q1, q2, m)
        worst = max(worst, math.hypot(fx - tx, fy - ty))
    assert worst <= 1e-9


def test_ik_elbow_down_branch():
    # target at (l1, l2) from the shoulder is exactly q1=0, q2=+pi/2
    arm = CFG.arm
    q1, q2, ok = kin.ik(arm, arm.l1, arm.l2, 0.0)
    assert ok
    assert abs(q1) < 1e-12 and abs(q2 - math.pi / 2) < 1e-12


def test_ik_unreachable_flagged_and_clamped():
    arm = CFG.arm
    r_lo, r_hi = kin.reach_interval(arm)
    _, _, ok = kin.ik(arm, r_hi + 0.2, 0.0, 0.0)
    assert not ok
    tx, ty, clamped = kin.clamp_target(arm, r_hi + 0.2, 0.0, 0.0)
    assert clamped and abs(tx - r_hi) < 1e-12 and ty == 0.0
    # inner hole: too-close targets push out to the inner boundary
    tx, ty, clamped = kin.clamp_target(arm, 0.01, 0.0, 0.0)
    assert clamped and abs(math.hypot(tx, ty) - r_lo) < 1e-12
    # direction is preserved when clamping
    tx, ty, _ = kin.clamp_target(arm, 3.0, 4.0, 0.0)
    assert abs(tx / ty - 3.0 / 4.0) < 1e-9


def test_mount_shifts_with_pitch_and_height():
    arm, lim = CFG.arm, CFG.limits
    m0 = kin.mount_offset(arm, lim, 0.0, lim.height_nominal)
    assert m0 == pytest.approx(arm.mount_x)
    m_fwd = kin.mount_offset(arm, lim, 0.4, lim.height_min)
    assert m_fwd > m0  # pitching down and crouching both extend reach
    assert m_fwd == pytest.approx(
        arm.mount_x + 0.4 * arm.k_pitch + (lim.height_nominal - lim.height_min) * arm.k_height)


@given(st.floats(-10, 10, allow_nan=False))
def test_wrap_angle_range(a):
    w = wrap_angle(a)
    assert -math.pi <= w <= math.pi
    assert abs(math.sin(w) - math.sin(a)) < 1e-9
    assert abs(math.cos(w) - math.cos(a)) < 1e-9


# --------------------------------------------------------------- integration

def test_straight_drive_advance_exact():
    st0 = reset_task(CFG, "task1", "center", 1)
    st0.x, st0.y, st0.yaw = 1.0, 1.0, 0.0
    st = st0
    for _ in range(50):  # 1.0 s at 50 Hz
        st = step(CFG, st, (0.3, 0.0, 0.0), (0.3, 0.0, 0.0, 0.0, 0.30))
    assert abs((st.x - st0.x) - 0.30) <= 1e-9
    assert abs(st.y - st0.y) <= 1e-9
    assert abs(st.sim_time - st0.sim_time - 1.0) <= 1e-9


def test_turn_in_place_exact():
    st0 = reset_task(CFG, "task1", "center", 2)
    st0.x, st0.y, st0.yaw = 1.0, 1.0, 0.2
    st = st0
    for _ in range(50):
        st = step(CFG, st, (0.3, 0.0, 0.0), (0.0, 0.0, 0.5, 0.0, 0.30))
    assert abs(wrap_angle(st.yaw - st0.yaw) - 0.5) <= 1e-9
    assert abs(st.x - st0.x) <= 1e-12 and abs(st.y - st0.y) <= 1e-12


def test_commands_clamped_to_limits():
    cmd = clamp_base_command(CFG, (99, -99, 42, 9, -9))
    lim = CFG.limits
    assert cmd == (lim.v_max, -lim.v_max, lim.wz_max, lim.pitch_max, lim.height_min)


def test_posture_rate_limited():
    st = reset_task(CFG, "task1", "center", 3)
    st1 = step(CFG, st, (0.3, 0.0, 0.0), (0, 0, 0, 0.4, 0.30))
    assert st1.pitch - st.pitch == pytest.approx(CFG.limits.pitch_rate * CFG.dt)


def test_step_is_functional():
    st = reset_task(CFG, "task1", "center", 4)
    before = (st.x, st.y, st.yaw, st.q1, st.q2)
    step(CFG, st, (0.3, 0.0, 0.0), (0.5, 0.0, 0.3, 0.1, 0.28))
    assert (st.x, st.y, st.yaw, st.q1, st.q2) == before


# -------------------------------------------------------------- interactions

def test_reset_task1_layout():
    st = reset_task(CFG, "task1", "center", 11)
    assert st.drawer_fraction == 0.0
    assert st.attachment == Attachment.ON_CABINET
    assert not st.gripper_closed
    rect = CFG.scene.region("center")
    assert rect[0] <= st.x <= rect[1] and rect[2] <= st.y <= rect[3]


def test_reset_task2_layout():
    fractions = set()
    for seed in range(20):
        st = reset_task(CFG, "task2", "center", seed)
        assert st.attachment == Attachment.GRASPED
        assert st.gripper_closed
        fractions.add(st.drawer_fraction)
    assert fractions == {0.5, 1.0}


def test_reset_regions_disjoint():
    sl = reset_task(CFG, "task1", "left", 5)
    sr = reset_task(CFG, "task1", "right", 5)
    assert sl.x < sr.x
    with pytest.raises(Exception):
        reset_task(CFG, "task1", "nowhere", 5)


def test_grasp_toy_from_cabinet_top():
    st = _state_at_manip_pose("task1", seed=21)
    # creep closer and pitch forward so the cabinet-top toy is in reach
    for _ in range(60):
        st = step(CFG, st, (0.3, 0.0, 0.0), (0.25, 0.0, 0.0, 0.35, 0.26))
    toy = (st.toy_x, st.toy_y)
    st = _drive_arm(CFG, st, toy, gripper=0.0)
    st = step(CFG, st, (*kin.world_to_base(st.x, st.y, st.yaw, *toy), 1.0),
              (0, 0, 0, st.pitch, st.height))
    assert st.attachment == Attachment.GRASPED
    # held toy tracks the hand
    st2 = _drive_arm(CFG, st, (toy[0], toy[1] - 0.15), gripper=1.0, steps=40)
    assert math.hypot(st2.toy_x - toy[0], st2.toy_y - (toy[1] - 0.15)) < 0.02


def test_open_drawer_by_pulling_handle():
    st = _state_at_manip_pose("task1", seed=22)
    hx, hy = handle_position(CFG, 0.0)
    st = _drive_arm(CFG, st, (hx, hy), gripper=0.0)
    st = step(CFG, st, (*kin.world_to_base(st.x, st.y, st.yaw, hx, hy), 1.0),
              (0, 0, 0, st.pitch, st.height))
    fractions = [st.drawer_fraction]
    for target_y in np.linspace(hy, hy - CFG.scene.drawer_travel, 40):
        st = _drive_arm(CFG, st, (hx, target_y), gripper=1.0, steps=4)
        fractions.append(st.drawer_fraction)
    assert fractions[-1] > 0.95
    diffs = np.diff(fractions)
    assert (diffs >= -1e-9).all()  # pulling outward never closes it
    assert all(0.0 <= f <= 1.0 for f in fractions)


def test_place_toy_in_open_drawer_and_close():
    st = _state_at_manip_pose("task2", seed=23)
    st.drawer_fraction = 1.0
    cav = drawer_cavity(CFG, st.drawer_fraction)
    drop = ((cav[0] + cav[1]) / 2, (cav[2] + cav[3]) / 2)
    st = _drive_arm(CFG, st, drop, gripper=1.0)
    st = step(CFG, st, (*kin.world_to_base(st.x, st.y, st.yaw, *drop), 0.0),
              (0, 0, 0, st.pitch, st.height))
    assert st.attachment == Attachment.IN_DRAWER
    toy_before = (st.toy_x, st.toy_y)
    # toy rides along as the drawer shuts
    hx, hy = handle_position(CFG, st.drawer_fraction)
    st = _drive_arm(CFG, st, (hx, hy), gripper=0.0)
    st = step(CFG, st, (*kin.world_to_base(st.x, st.y, st.yaw, hx, hy), 1.0),
              (0, 0, 0, st.pitch, st.height))
    home_y = handle_position(CFG, 0.0)[1]
    for target_y in np.linspace(hy, home_y + 0.01, 30):
        st = _drive_arm(CFG, st, (hx, target_y), gripper=1.0, steps=4)
    assert st.drawer_fraction < 0.05
    assert st.attachment == Attachment.IN_DRAWER
    assert st.toy_y > toy_before[1]  # slid back in with the drawer


def test_release_elsewhere_drops_toy_free():
    st = _state_at_manip_pose("task2", seed=24)
    st = step(CFG, st, (0.3, 0.1, 0.0), (0, 0, 0, st.pitch, st.height))
    ee = (st.toy_x, st.toy_y)  # grasped: toy is at the hand
    st = step(CFG, st, (0.3, 0.1, 0.0), (0, 0, 0, st.pitch, st.height))
    assert st.attachment == Attachment.FREE
    assert math.hypot(st.toy_x - ee[0], st.toy_y - ee[1]) < 0.05


def test_close_gripper_away_from_everything_grabs_nothing():
    st = reset_task(CFG, "task1", "center", 25)
    st = step(CFG, st, (0.3, 0.0, 1.0), (0, 0, 0, 0, 0.3))
    assert st.attachment == Attachment.ON_CABINET
    assert st.gripper_closed


# ------------------------------------------------- determinism and invariants

def _random_rollout(seed, n_ticks=80):
    rng = np.random.default_rng(seed + 1000)
    st = reset_task(CFG, "task1", "center", seed)
    trace = []
    for _ in range(n_ticks):
        arm = (rng.uniform(-0.6, 0.6), rng.uniform(-0.6, 0.6), rng.uniform(0, 1))
        base = (rng.uniform(-0.6, 0.6), rng.uniform(-0.6, 0.6), rng.uniform(-1.2, 1.2),
                rng.uniform(-0.1, 0.45), rng.uniform(0.22, 0.38))
        st = hl_tick(CFG, st, arm, base)
        trace.append((st.x, st.y, st.yaw, st.q1, st.q2, st.drawer_fraction,
                      st.toy_x, st.toy_y, int(st.attachment)))
    return trace


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_rollouts_bit_identical(seed):
    assert _random_rollout(seed) == _random_rollout(seed)


def test_invariants_under_command_fuzz():
    rng = np.random.default_rng(99)
    st = reset_task(CFG, "task1", "center", 99)
    n = 20_000
    arms = np.column_stack([rng.uniform(-2, 2, n), rng.uniform(-2, 2, n), rng.uniform(0, 1, n)])
    bases = np.column_stack([
        rng.uniform(-2, 2, n), rng.uniform(-2, 2, n), rng.uniform(-3, 3, n),
        rng.uniform(-1, 1, n), rng.uniform(0, 1, n)])
    for i in range(n):
        st = step(CFG, st, arms[i], bases[i])
        f = st.drawer_fraction
        assert 0.0 <= f <= 1.0
        assert not in_cabinet_footprint(CFG, st.x, st.y)
        assert CFG.scene.base_radius - 1e-9 <= st.x <= CFG.scene.room_w - CFG.scene.base_radius + 1e-9
        assert CFG.limits.height_min <= st.height <= CFG.limits.height_max


def test_drawer_geometry_helpers():
    assert drawer_front_y(CFG, 0.0) == pytest.approx(
        CFG.scene.cabinet_cy - CFG.scene.cabinet_hy)
    assert drawer_front_y(CFG, 1.0) == pytest.approx(
        CFG.scene.cabinet_cy - CFG.scene.cabinet_hy - CFG.scene.drawer_travel)
    hx, hy = handle_position(CFG, 0.5)
    assert hx == CFG.scene.cabinet_cx
    assert hy == pytest.approx(drawer_front_y(CFG, 0.5) - CFG.scene.handle_depth)


# ------------------------------------------------------------- observations

def test_proprio_layout_matches_state():
    st = reset_task(CFG, "task1", "center", 31)
    st.vx, st.vy, st.wz = 0.11, -0.07, 0.4
    p = proprio_vector(CFG, st)
    assert p.shape == (14,)
    assert p[0] == st.x and p[1] == st.y
    assert p[2] == pytest.approx(math.cos(st.yaw))
    assert p[3] == pytest.approx(math.sin(st.yaw))
    assert tuple(p[6:9]) == (0.11, -0.07, 0.4)
    assert p[13] == 0.0
    mount = kin.mount_offset(CFG.arm, CFG.limits, st.pitch, st.height)
    ee = kin.fk(CFG.arm, st.q1, st.q2, mount)
    assert p[11] == pytest.approx(ee[0]) and p[12] == pytest.approx(ee[1])


def test_render_deterministic_and_distinct():
    st = reset_task(CFG, "task1", "center", 32)
    v1 = render_views(CFG, st)
    v2 = render_views(CFG, st)
    assert set(v1) == {"wrist", "body", "head"}
    for name in v1:
        assert v1[name].dtype == np.uint8 and v1[name].shape == (96, 96, 3)
        assert np.array_equal(v1[name], v2[name])
    assert not np.array_equal(v1["wrist"], v1["body"])
    assert not np.array_equal(v1["body"], v1["head"])


def test_render_reflects_drawer_state():
    st = reset_task(CFG, "task1", "center", 33)
    st.x, st.y, st.yaw = CFG.scene.manip_cx, CFG.scene.manip_cy, math.pi / 2
    closed = render_views(CFG, st)
    st.drawer_fraction = 1.0
    opened = render_views(CFG, st)
    assert not np.array_equal(closed["wrist"], opened["wrist"])
    assert not np.array_equal(closed["head"], opened["head"])


def test_observe_bundle_and_purity():
    st = reset_task(CFG, "task2", "center", 34)
    snap = (st.x, st.q1, st.drawer_fraction, st.toy_x)
    ob = observe(CFG, st, "bring the toy")
    assert ob.instruction == "bring the toy"
    assert ob.sim_time == st.sim_time
    assert (st.x, st.q1, st.drawer_fraction, st.toy_x) == snap


def test_head_view_occludes_toy_behind_cabinet():
    st = reset_task(CFG, "task1", "center", 35)
    st.x, st.y, st.yaw = 2.5, 1.0, math.pi / 2
    st.attachment = Attachment.FREE
    st.toy_x, st.toy_y = 2.5, 2.0          # in front of the cabinet, visible
    vis = render_views(CFG, st)["head"]
    st.toy_x, st.toy_y = 2.5, 3.95         # behind the cabinet, occluded
    hid = render_views(CFG, st)["head"]
    toy_px_vis = (np.abs(vis.astype(int) - np.array([222, 44, 44])).sum(axis=2) < 90).sum()
    toy_px_hid = (np.abs(hid.astype(int) - np.array([222, 44, 44])).sum(axis=2) < 90).sum()
    assert toy_px_vis > 0
    assert toy_px_hid == 0
