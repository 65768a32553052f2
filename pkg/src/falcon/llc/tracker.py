"""Adapters that let low-level controllers drive the world simulator's
velocity-tracking layer, interchangeably with the ideal tracker."""

from __future__ import annotations

import numpy as np

from ..config import RunConfig, WorldConfig
from ..world.sim import IdealTracker
from . import dynamics as dyn
from .analytic import AnalyticController
from .env import build_obs
from .ppo import load_llc_checkpoint
from .types import ACT_DIM

__all__ = ["LlcTracker", "build_tracker"]


class LlcTracker:
    """Runs a controller against the reduced model at the world step rate and
    feeds the resulting realized velocities/posture back to the simulator."""

    def __init__(self, cfg_llc, controller, height_nominal: float):
        self.cfg = cfg_llc
        self.controller = controller
        self.h_nom = height_nominal
        self._dyn = None
        self.params = dyn.DynParams.nominal(1)
        self.prev_u = np.zeros((1, ACT_DIM))

    def reset(self) -> None:
        self._dyn = None
        self.prev_u = np.zeros((1, ACT_DIM))

    def track(self, cfg: WorldConfig, state, cmd, dt: float):
        if self._dyn is None:
            self._dyn = dyn.DynState.rest(1, self.h_nom)
            self._dyn.v[0] = (state.vx, state.vy)
            self._dyn.wz[0] = state.wz
            self._dyn.h[0] = state.height
            self._dyn.th[0] = state.pitch
        cmd_arr = np.asarray(cmd, dtype=np.float64).reshape(1, 5)
        obs = build_obs(self._dyn, cmd_arr, self.prev_u)
        u = np.asarray(self.controller(obs)).reshape(1, ACT_DIM)
        self._dyn = dyn.dynamics_step(self.cfg, cfg.limits, self._dyn, u, self.params)
        self.prev_u = u
        s = self._dyn
        return (float(s.v[0, 0]), float(s.v[0, 1]), float(s.wz[0]),
                float(np.clip(s.h[0], cfg.limits.height_min, cfg.limits.height_max)),
                float(np.clip(s.th[0], cfg.limits.pitch_min, cfg.limits.pitch_max)))


def build_tracker(cfg: RunConfig):
    """Instantiate the tracking backend named by ``world.llc_backend``."""
    backend = cfg.world.llc_backend
    if backend == "ideal":
        return IdealTracker()
    h_nom = cfg.world.limits.height_nominal
    if backend == "analytic":
        return LlcTracker(cfg.llc, AnalyticController(cfg.llc, h_nom), h_nom)
    if backend.startswith("ppo:"):
        model = load_llc_checkpoint(backend[len("ppo:"):])
        return LlcTracker(cfg.llc, model.mean_action, h_nom)
    raise ValueError(f"unknown llc backend {backend!r}")
