"""Reduced rigid-body model the low-level controller is trained against.

DOFs per env: planar body velocity (vx, vy), yaw rate, stance height and
torso pitch (second order, spring-loaded toward nominal), and a passive
self-righting roll excited by disturbance pushes. Actuation ``u`` has five
channels in [-1, 1], scaled to forces/torques; mass, drag and push magnitude
are domain-randomized per episode.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..config import BaseLimits, DomainRandomization, LlcConfig

__all__ = ["DynState", "DynParams", "sample_params", "dynamics_step", "gravity_from_state"]

# spring/damper constants of the reduced model
K_H = 5.0      # height spring toward nominal
D_H = 4.0
K_TH = 4.0     # pitch spring toward level
D_TH = 1.5
K_PHI = 24.0   # passive roll righting
D_PHI = 4.0
C_W = 0.8      # yaw-rate drag
I_SCALE = 0.4  # rotational inertia = I_SCALE * mass
H_CLAMP = (0.15, 0.45)
TH_CLAMP = (-0.6, 0.7)


@dataclass
class DynState:
    """Vectorized dynamic state, all arrays shaped (n,)."""

    v: np.ndarray        # (n, 2) planar body velocity
    wz: np.ndarray
    h: np.ndarray
    hd: np.ndarray
    th: np.ndarray       # pitch
    thd: np.ndarray
    phi: np.ndarray      # roll
    phid: np.ndarray

    @classmethod
    def rest(cls, n: int, h0: float) -> "DynState":
        z = lambda: np.zeros(n)
        return cls(v=np.zeros((n, 2)), wz=z(), h=np.full(n, h0), hd=z(),
                   th=z(), thd=z(), phi=z(), phid=z())

    def copy(self) -> "DynState":
        return DynState(self.v.copy(), self.wz.copy(), self.h.copy(), self.hd.copy(),
                        self.th.copy(), self.thd.copy(), self.phi.copy(), self.phid.copy())


@dataclass
class DynParams:
    mass: np.ndarray
    drag: np.ndarray
    push: np.ndarray

    @classmethod
    def nominal(cls, n: int) -> "DynParams":
        return cls(mass=np.ones(n), drag=np.full(n, 0.375), push=np.zeros(n))


def sample_params(dr: DomainRandomization, rng: np.random.Generator, n: int) -> DynParams:
    """Per-episode domain randomization draws, each within its config range."""
    return DynParams(
        mass=rng.uniform(dr.mass_scale[0], dr.mass_scale[1], n),
        drag=rng.uniform(dr.drag[0], dr.drag[1], n),
        push=rng.uniform(dr.push_std[0], dr.push_std[1], n),
    )


def dynamics_step(cfg: LlcConfig, limits: BaseLimits, s: DynState, u: np.ndarray,
                  params: DynParams, noise: np.ndarray | None = None) -> DynState:
    """One 50 Hz step of the reduced model. Pure: returns a new state.

    u: (n, 5) actuation in [-1, 1]; noise: optional (n, 5) standard normals
    driving the disturbance pushes (zeros when omitted, so the step is
    deterministic for gradient checks and the analytic baseline).
    """
    dt = cfg.dt
    n = s.h.shape[0]
    u = np.clip(np.asarray(u, dtype=np.float64).reshape(n, 5), -1.0, 1.0)
    scale = np.asarray(cfg.act_scale)
    m = params.mass
    inertia = I_SCALE * m
    if noise is None:
        noise = np.zeros((n, 5))
    kick = params.push[:, None] * np.sqrt(dt) * noise

    out = s.copy()
    acc_v = u[:, :2] * scale[:2] / m[:, None] - params.drag[:, None] * s.v
    out.v = s.v + dt * acc_v + kick[:, :2]
    acc_w = u[:, 2] * scale[2] / inertia - C_W * s.wz
    out.wz = s.wz + dt * acc_w + 0.5 * kick[:, 2]

    h_nom = limits.height_nominal
    acc_h = (u[:, 4] * scale[4] - K_H * (s.h - h_nom)) / m - D_H * s.hd
    out.hd = s.hd + dt * acc_h
    out.h = np.clip(s.h + dt * out.hd, H_CLAMP[0], H_CLAMP[1])

    acc_th = (u[:, 3] * scale[3] - K_TH * s.th) / inertia - D_TH * s.thd
    out.thd = s.thd + dt * acc_th + kick[:, 3]
    out.th = np.clip(s.th + dt * out.thd, TH_CLAMP[0], TH_CLAMP[1])

    acc_phi = -(K_PHI * s.phi) / inertia - D_PHI * s.phid
    out.phid = s.phid + dt * acc_phi + 4.0 * kick[:, 4]
    out.phi = s.phi + dt * out.phid
    return out


def gravity_from_state(s: DynState) -> np.ndarray:
    """Measured body-frame gravity direction, (n, 3)."""
    from .rewards import gravity_in_body
    return gravity_in_body(s.phi, s.th)
