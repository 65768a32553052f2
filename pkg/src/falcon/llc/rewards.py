"""Orientation targets and the tracking reward for the low-level controller.

The desired gravity direction is the world down-vector expressed in the
commanded body frame: build the quaternion for (roll, pitch, 0), rotate
(0, 0, -1) into that frame. Flat-orientation identity: desired_gravity(0, 0)
is exactly (0, 0, -1). The orientation penalty compares only the x-y
components of measured vs desired body-frame gravity, so commanded pitch is
not punished while unwanted roll/pitch deviation is.
"""

from __future__ import annotations

import numpy as np

from ..config import RewardWeights

__all__ = [
    "quat_from_euler_zyx",
    "quat_rotate_inverse",
    "desired_gravity",
    "gravity_in_body",
    "orientation_penalty",
    "reward_components",
    "total_reward",
]


def quat_from_euler_zyx(yaw: float, pitch: float, roll: float) -> np.ndarray:
    """Quaternion (w, x, y, z) for intrinsic z-y-x rotations."""
    cy, sy = np.cos(yaw / 2.0), np.sin(yaw / 2.0)
    cp, sp = np.cos(pitch / 2.0), np.sin(pitch / 2.0)
    cr, sr = np.cos(roll / 2.0), np.sin(roll / 2.0)
    return np.array([
        cy * cp * cr + sy * sp * sr,
        cy * cp * sr - sy * sp * cr,
        cy * sp * cr + sy * cp * sr,
        sy * cp * cr - cy * sp * sr,
    ])


def quat_rotate_inverse(q: np.ndarray, v) -> np.ndarray:
    """Rotate world vector v into the body frame of quaternion q."""
    w = q[..., 0:1]
    xyz = q[..., 1:4]
    v = np.asarray(v, dtype=np.float64)
    t = 2.0 * np.cross(v, xyz)
    return v + w * t + np.cross(t, xyz)


def desired_gravity(roll: float, pitch: float) -> np.ndarray:
    """Body-frame gravity direction for a commanded (roll, pitch, yaw=0)."""
    q = quat_from_euler_zyx(0.0, pitch, roll)
    return quat_rotate_inverse(q, np.array([0.0, 0.0, -1.0]))


def gravity_in_body(roll, pitch):
    """Measured body-frame gravity for actual roll/pitch (vectorized)."""
    roll = np.asarray(roll, dtype=np.float64)
    pitch = np.asarray(pitch, dtype=np.float64)
    return np.stack([
        np.sin(pitch),
        -np.cos(pitch) * np.sin(roll),
        -np.cos(pitch) * np.cos(roll),
    ], axis=-1)


def orientation_penalty(g, g_des) -> np.ndarray:
    """Squared x-y mismatch between measured and desired body gravity."""
    g = np.asarray(g, dtype=np.float64)
    g_des = np.asarray(g_des, dtype=np.float64)
    d = g[..., :2] - g_des[..., :2]
    return (d * d).sum(axis=-1)


def reward_components(w: RewardWeights, v, wz, cmd, height, g, g_des, u, prev_u):
    """Per-term reward dict, vectorized over leading axes.

    v: (..., 2) planar body velocity; wz yaw rate; cmd (..., 5) command;
    height stance height; g / g_des body gravity; u / prev_u actuation.
    """
    v = np.asarray(v, dtype=np.float64)
    cmd = np.asarray(cmd, dtype=np.float64)
    verr = ((v - cmd[..., :2]) ** 2).sum(axis=-1) + (wz - cmd[..., 2]) ** 2
    herr = (height - cmd[..., 4]) ** 2
    du = np.asarray(u, dtype=np.float64) - np.asarray(prev_u, dtype=np.float64)
    return {
        "track_v": w.w_v * np.exp(-verr / w.sigma_v),
        "track_h": w.w_h * np.exp(-herr / w.sigma_h),
        "pen_ori": w.w_ori * orientation_penalty(g, g_des),
        "pen_act": w.w_u * (du * du).sum(axis=-1),
    }


def total_reward(components: dict) -> np.ndarray:
    return (components["track_v"] + components["track_h"]
            - components["pen_ori"] - components["pen_act"])
