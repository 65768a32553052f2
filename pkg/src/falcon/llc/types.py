"""State containers for the reduced-model low-level controller."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = ["LlcState", "OBS_DIM", "ACT_DIM", "CMD_DIM"]

ACT_DIM = 5   # actuation: [fx, fy, torque_z, pitch torque, height force]
CMD_DIM = 5   # command:   [vx, vy, wz, pitch, height]
# observation: q(2) q_dot(2) g(3) omega(1) v(2) cmd(5) prev_u(5)
OBS_DIM = 20


@dataclass
class LlcState:
    """Proprioceptive controller state.

    q / q_dot: posture DOFs (stance height, torso pitch) and their rates;
    g: gravity direction in the body frame; omega: yaw rate;
    cmd: the high-level command currently being tracked.
    """

    q: np.ndarray = field(default_factory=lambda: np.zeros(2))
    q_dot: np.ndarray = field(default_factory=lambda: np.zeros(2))
    g: np.ndarray = field(default_factory=lambda: np.array([0.0, 0.0, -1.0]))
    omega: float = 0.0
    cmd: np.ndarray = field(default_factory=lambda: np.zeros(CMD_DIM))
