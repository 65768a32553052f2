"""Analytic PD/feedforward baseline controller for the reduced model.

Assumes nominal parameters (mass 1, mid-range drag) and cancels the known
springs; serves both as a correctness baseline for the learned controller
and as a drop-in tracking backend for the world simulator.
"""

from __future__ import annotations

import numpy as np

from ..config import LlcConfig
from . import dynamics as dyn
from .types import ACT_DIM

__all__ = ["AnalyticController"]

KP_V = 4.0
KP_W = 5.0
KP_TH = 24.0
KD_TH = 6.0
KP_H = 30.0
KD_H = 9.0
NOM_MASS = 1.0
NOM_DRAG = 0.375


class AnalyticController:
    """Maps LLC observations to actuation; stateless, vectorized."""

    def __init__(self, cfg: LlcConfig, height_nominal: float):
        self.cfg = cfg
        self.h_nom = height_nominal

    def __call__(self, obs: np.ndarray) -> np.ndarray:
        obs = np.atleast_2d(np.asarray(obs, dtype=np.float64))
        h, th, hd, thd = obs[:, 0], obs[:, 1], obs[:, 2], obs[:, 3]
        wz = obs[:, 7]
        v = obs[:, 8:10]
        cmd = obs[:, 10:15]
        s = np.asarray(self.cfg.act_scale)
        inertia = dyn.I_SCALE * NOM_MASS
        u = np.zeros((obs.shape[0], ACT_DIM))
        u[:, :2] = (NOM_DRAG * cmd[:, :2] + KP_V * (cmd[:, :2] - v)) * NOM_MASS / s[:2]
        u[:, 2] = (dyn.C_W * cmd[:, 2] + KP_W * (cmd[:, 2] - wz)) * inertia / s[2]
        u[:, 3] = (dyn.K_TH * th + inertia * (KP_TH * (cmd[:, 3] - th) - KD_TH * thd)) / s[3]
        u[:, 4] = (dyn.K_H * (h - self.h_nom)
                   + NOM_MASS * (KP_H * (cmd[:, 4] - h) - KD_H * hd)) / s[4]
        return np.clip(u, -1.0, 1.0)
