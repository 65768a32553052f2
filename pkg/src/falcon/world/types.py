"""State and observation containers for the planar loco-manipulation world."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from enum import IntEnum

import numpy as np

__all__ = [
    "Attachment",
    "WorldState",
    "ObservationBundle",
    "PROPRIO_DIM",
    "PROPRIO_FIELDS",
    "wrap_angle",
    "copy_rng",
]

PROPRIO_FIELDS = (
    "x", "y", "cos_yaw", "sin_yaw", "height", "pitch",
    "vx", "vy", "wz", "q1", "q2", "ee_x", "ee_y", "gripper",
)
PROPRIO_DIM = len(PROPRIO_FIELDS)


class Attachment(IntEnum):
    FREE = 0
    GRASPED = 1
    IN_DRAWER = 2
    ON_CABINET = 3


def wrap_angle(a: float) -> float:
    """Wrap to (-pi, pi]."""
    return math.atan2(math.sin(a), math.cos(a))


def copy_rng(rng: np.random.Generator) -> np.random.Generator:
    new = np.random.Generator(np.random.PCG64())
    new.bit_generator.state = rng.bit_generator.state
    return new


@dataclass
class WorldState:
    """Full ground-truth world state. All distances in meters, angles in rad.

    Base pose lives in the world frame; (vx, vy) are body-frame planar
    velocities. The arm is a planar two-link chain in the base frame whose
    effective mount point shifts with torso pitch and stance height.
    """

    task_id: str
    # base
    x: float
    y: float
    yaw: float
    height: float
    pitch: float
    vx: float = 0.0
    vy: float = 0.0
    wz: float = 0.0
    # arm
    q1: float = 0.0
    q2: float = 1.6
    gripper_closed: bool = False
    # objects
    drawer_fraction: float = 0.0
    toy_x: float = 0.0
    toy_y: float = 0.0
    toy_slot: float = 0.0
    attachment: Attachment = Attachment.FREE
    # bookkeeping
    sim_time: float = 0.0
    tick: int = 0
    region: str = "center"
    seed: int = 0
    ik_clamped: bool = False
    rng: np.random.Generator = field(default_factory=lambda: np.random.default_rng(0))

    def copy(self) -> "WorldState":
        return replace(self, rng=copy_rng(self.rng))


@dataclass
class ObservationBundle:
    """What the high-level policies are allowed to see at one tick."""

    views: dict            # name -> (R, R, 3) uint8, names: wrist, body, head
    proprio: np.ndarray    # (PROPRIO_DIM,) float64, layout in PROPRIO_FIELDS
    instruction: str
    sim_time: float
