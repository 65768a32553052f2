"""Closed-form kinematics for the planar two-link arm.

The arm operates in the base x-y plane. Its shoulder sits ``mount_x`` ahead
of the base center and shifts further forward when the torso pitches down
or the stance height drops below nominal, which is how body posture extends
the reachable workspace.
"""

from __future__ import annotations

import math

from ..config import ArmConfig, BaseLimits

__all__ = [
    "mount_offset",
    "fk",
    "ik",
    "reach_interval",
    "clamp_target",
    "ee_world",
    "base_to_world",
    "world_to_base",
]


def mount_offset(arm: ArmConfig, limits: BaseLimits, pitch: float, height: float) -> float:
    """Effective shoulder x-offset in the base frame for a given posture."""
    return arm.mount_x + arm.k_pitch * pitch + arm.k_height * (limits.height_nominal - height)


def fk(arm: ArmConfig, q1: float, q2: float, mount: float = 0.0) -> tuple:
    """End-effector position in the base frame."""
    x = arm.l1 * math.cos(q1) + arm.l2 * math.cos(q1 + q2)
    y = arm.l1 * math.sin(q1) + arm.l2 * math.sin(q1 + q2)
    return (mount + x, y)


def reach_interval(arm: ArmConfig) -> tuple:
    """(min, max) radius reachable around the shoulder."""
    return (abs(arm.l1 - arm.l2), arm.l1 + arm.l2)


def ik(arm: ArmConfig, tx: float, ty: float, mount: float = 0.0) -> tuple:
    """Inverse kinematics, elbow-down branch.

    Returns (q1, q2, reachable). Unreachable targets are solved for the
    nearest point on the reach boundary and flagged.
    """
    dx = tx - mount
    dy = ty
    r = math.hypot(dx, dy)
    r_lo, r_hi = reach_interval(arm)
    reachable = r_lo <= r <= r_hi
    c2 = (r * r - arm.l1 * arm.l1 - arm.l2 * arm.l2) / (2.0 * arm.l1 * arm.l2)
    c2 = min(1.0, max(-1.0, c2))
    q2 = math.acos(c2)
    q1 = math.atan2(dy, dx) - math.atan2(arm.l2 * math.sin(q2), arm.l1 + arm.l2 * math.cos(q2))
    return (q1, q2, reachable)


def clamp_target(arm: ArmConfig, tx: float, ty: float, mount: float = 0.0) -> tuple:
    """Clamp a base-frame target into the reach annulus, keeping direction.

    Returns (x, y, clamped).
    """
    dx = tx - mount
    dy = ty
    r = math.hypot(dx, dy)
    r_lo, r_hi = reach_interval(arm)
    eps = 1e-9
    if r > r_hi:
        s = r_hi / r
        return (mount + dx * s, dy * s, True)
    if r < r_lo:
        if r < eps:
            return (mount + r_lo, 0.0, True)
        s = r_lo / r
        return (mount + dx * s, dy * s, True)
    return (tx, ty, False)


def base_to_world(x: float, y: float, yaw: float, px: float, py: float) -> tuple:
    c, s = math.cos(yaw), math.sin(yaw)
    return (x + c * px - s * py, y + s * px + c * py)


def world_to_base(x: float, y: float, yaw: float, px: float, py: float) -> tuple:
    dx, dy = px - x, py - y
    c, s = math.cos(yaw), math.sin(yaw)
    return (c * dx + s * dy, -s * dx + c * dy)


def ee_world(arm: ArmConfig, limits: BaseLimits, x: float, y: float, yaw: float,
             pitch: float, height: float, q1: float, q2: float) -> tuple:
    m = mount_offset(arm, limits, pitch, height)
    ex, ey = fk(arm, q1, q2, m)
    return base_to_world(x, y, yaw, ex, ey)
