"""Vectorized training environment for the low-level controller."""

from __future__ import annotations

import numpy as np

from ..config import BaseLimits, LlcConfig
from . import dynamics as dyn
from .rewards import desired_gravity, gravity_in_body, reward_components, total_reward
from .types import ACT_DIM, CMD_DIM, OBS_DIM

__all__ = ["LlcVecEnv", "CMD_LO", "CMD_HI", "build_obs"]

# command sampling ranges: vx, vy, wz, pitch, height
CMD_LO = np.array([-0.5, -0.5, -0.9, -0.10, 0.24])
CMD_HI = np.array([0.5, 0.5, 0.9, 0.35, 0.36])


def build_obs(s: dyn.DynState, cmd: np.ndarray, prev_u: np.ndarray) -> np.ndarray:
    """obs layout: q(2) q_dot(2) g(3) omega(1) v(2) cmd(5) prev_u(5)."""
    g = gravity_in_body(s.phi, s.th)
    return np.concatenate([
        s.h[:, None], s.th[:, None], s.hd[:, None], s.thd[:, None],
        g, s.wz[:, None], s.v, cmd, prev_u,
    ], axis=1)


class LlcVecEnv:
    """N parallel reduced-model episodes with per-episode randomization.

    Commands are piecewise constant, resampled every ``resample_every``
    steps; episodes last ``episode_len`` steps and auto-reset.
    """

    def __init__(self, cfg: LlcConfig, limits: BaseLimits, n_envs: int,
                 seed: int = 0, resample_every: int | None = None,
                 randomize: bool = True):
        self.cfg = cfg
        self.limits = limits
        self.n = n_envs
        self.rng = np.random.default_rng(seed)
        self.resample_every = resample_every or cfg.ppo.resample_cmd_every
        self.episode_len = cfg.ppo.episode_len
        self.randomize = randomize
        self.state = dyn.DynState.rest(self.n, limits.height_nominal)
        self.params = dyn.DynParams.nominal(self.n)
        self.cmd = np.zeros((self.n, CMD_DIM))
        self.prev_u = np.zeros((self.n, ACT_DIM))
        self.t = np.zeros(self.n, dtype=np.int64)

    def _sample_cmd(self, idx) -> None:
        k = int(np.sum(idx)) if idx.dtype == bool else len(idx)
        self.cmd[idx] = self.rng.uniform(CMD_LO, CMD_HI, size=(k, CMD_DIM))

    def _reset_envs(self, idx) -> None:
        if self.randomize:
            drawn = dyn.sample_params(self.cfg.dr, self.rng, int(np.sum(idx)))
            self.params.mass[idx] = drawn.mass
            self.params.drag[idx] = drawn.drag
            self.params.push[idx] = drawn.push
        self.state.v[idx] = 0.0
        self.state.wz[idx] = 0.0
        self.state.h[idx] = self.limits.height_nominal
        self.state.hd[idx] = 0.0
        self.state.th[idx] = 0.0
        self.state.thd[idx] = 0.0
        self.state.phi[idx] = 0.0
        self.state.phid[idx] = 0.0
        self.prev_u[idx] = 0.0
        self.t[idx] = 0
        self._sample_cmd(idx)

    def reset(self) -> np.ndarray:
        self._reset_envs(np.ones(self.n, dtype=bool))
        return build_obs(self.state, self.cmd, self.prev_u)

    def step(self, u: np.ndarray):
        u = np.clip(np.asarray(u, dtype=np.float64), -1.0, 1.0)
        noise = self.rng.standard_normal((self.n, ACT_DIM))
        self.state = dyn.dynamics_step(self.cfg, self.limits, self.state, u,
                                       self.params, noise)
        g = gravity_in_body(self.state.phi, self.state.th)
        # desired roll is zero, so this matches desired_gravity(0, pitch_cmd)
        g_des = gravity_in_body(np.zeros(self.n), self.cmd[:, 3])
        comps = reward_components(self.cfg.rewards, self.state.v, self.state.wz,
                                  self.cmd, self.state.h, g, g_des, u, self.prev_u)
        rew = total_reward(comps)
        self.prev_u = u.copy()
        self.t += 1
        resample = (self.t % self.resample_every == 0) & (self.t < self.episode_len)
        if resample.any():
            self._sample_cmd(resample)
        done = self.t >= self.episode_len
        verr = np.hypot(self.state.v[:, 0] - self.cmd[:, 0],
                        self.state.v[:, 1] - self.cmd[:, 1])
        ori = comps["pen_ori"] / max(self.cfg.rewards.w_ori, 1e-12)
        info = {
            "vel_err": verr,
            "ori_pen": ori,
            "components": {k: float(np.mean(v)) for k, v in comps.items()},
        }
        if done.any():
            # episodes end on a time limit only: expose the pre-reset obs so
            # the learner can bootstrap values across the reset correctly
            info["terminal_obs"] = build_obs(self.state, self.cmd, self.prev_u)
            self._reset_envs(done)
        obs = build_obs(self.state, self.cmd, self.prev_u)
        return obs, rew, done, info
