from .types import Attachment, ObservationBundle, WorldState, PROPRIO_DIM, PROPRIO_FIELDS
from .sim import (
    IdealTracker, reset_task, step, hl_tick, predicates, proprio_vector,
    clamp_base_command, TASK_IDS,
)
from .render import render_views, observe, VIEW_NAMES
from . import kinematics

__all__ = [
    "Attachment", "ObservationBundle", "WorldState", "PROPRIO_DIM", "PROPRIO_FIELDS",
    "IdealTracker", "reset_task", "step", "hl_tick", "predicates", "proprio_vector",
    "clamp_base_command", "TASK_IDS", "render_views", "observe", "VIEW_NAMES",
    "kinematics",
]
