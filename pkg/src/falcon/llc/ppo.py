"""Clipped-surrogate policy optimization for the low-level controller.

Small Gaussian actor-critic MLPs trained against the vectorized reduced
model with generalized advantage estimation. The surrogate loss lives in
its own function so gradient checks can differentiate it directly.
"""

from __future__ import annotations

import csv
import math
import time
from pathlib import Path

import numpy as np
import torch
import torch.nn as nn

from ..chunkfile import ChunkReader, ChunkWriter
from ..config import BaseLimits, LlcConfig
from .analytic import AnalyticController
from .env import LlcVecEnv
from .types import ACT_DIM, OBS_DIM

__all__ = [
    "ActorCritic", "ppo_surrogate_loss", "compute_gae", "train_ppo",
    "evaluate_controller", "save_llc_checkpoint", "load_llc_checkpoint",
    "LLC_CHECKPOINT_VERSION",
]

LLC_CHECKPOINT_VERSION = 1


def _mlp(sizes, act=nn.Tanh):
    layers = []
    for i in range(len(sizes) - 1):
        layers.append(nn.Linear(sizes[i], sizes[i + 1]))
        if i < len(sizes) - 2:
            layers.append(act())
    return nn.Sequential(*layers)


class ActorCritic(nn.Module):
    def __init__(self, obs_dim: int = OBS_DIM, act_dim: int = ACT_DIM,
                 hidden: int = 64, value_scale: float = 1.0):
        super().__init__()
        self.obs_dim, self.act_dim = obs_dim, act_dim
        # the value head learns returns / value_scale so its gradients stay
        # O(1) next to the policy gradient under a shared grad-norm clip
        self.value_scale = value_scale
        self.pi = _mlp([obs_dim, hidden, hidden, act_dim])
        self.vf = _mlp([obs_dim, hidden, hidden, 1])
        self.log_std = nn.Parameter(torch.full((act_dim,), -1.0))

    def dist(self, obs: torch.Tensor) -> torch.distributions.Normal:
        return torch.distributions.Normal(self.pi(obs), self.log_std.exp())

    def value(self, obs: torch.Tensor) -> torch.Tensor:
        return self.vf(obs).squeeze(-1) * self.value_scale

    def raw_value(self, obs: torch.Tensor) -> torch.Tensor:
        return self.vf(obs).squeeze(-1)

    @torch.no_grad()
    def act(self, obs_np: np.ndarray, generator: torch.Generator | None = None):
        obs = torch.as_tensor(obs_np, dtype=torch.float32)
        mean = self.pi(obs)
        std = self.log_std.exp().expand_as(mean)
        eps = torch.randn(mean.shape, generator=generator)
        action = mean + std * eps
        logp = (-0.5 * ((action - mean) / std) ** 2
                - std.log() - 0.5 * math.log(2 * math.pi)).sum(-1)
        return action.numpy(), logp.numpy(), self.value(obs).numpy()

    @torch.no_grad()
    def mean_action(self, obs_np: np.ndarray) -> np.ndarray:
        obs = torch.as_tensor(obs_np, dtype=torch.float32)
        return np.clip(self.pi(obs).numpy(), -1.0, 1.0)


def ppo_surrogate_loss(model: ActorCritic, obs: torch.Tensor, act: torch.Tensor,
                       old_logp: torch.Tensor, adv: torch.Tensor,
                       ret: torch.Tensor, clip: float = 0.2,
                       vf_coef: float = 0.5, ent_coef: float = 0.0) -> torch.Tensor:
    dist = model.dist(obs)
    logp = dist.log_prob(act).sum(-1)
    ratio = (logp - old_logp).exp()
    clipped = torch.clamp(ratio, 1.0 - clip, 1.0 + clip)
    pg = -torch.minimum(ratio * adv, clipped * adv).mean()
    vf = ((model.raw_value(obs) - ret / model.value_scale) ** 2).mean()
    ent = dist.entropy().sum(-1).mean()
    return pg + vf_coef * vf - ent_coef * ent


def compute_gae(rew, val, done, last_val, gamma: float, lam: float,
                terminal_val=None):
    """rew/val/done: (T, N); last_val: (N,). Episodes end on a time limit, so
    done steps bootstrap through the value of the pre-reset state when
    ``terminal_val`` (T, N) is provided."""
    T, N = rew.shape
    adv = np.zeros((T, N))
    gae = np.zeros(N)
    next_val = last_val
    for t in range(T - 1, -1, -1):
        if terminal_val is not None:
            boot = np.where(done[t] > 0.5, terminal_val[t], next_val)
        else:
            boot = next_val
        delta = rew[t] + gamma * boot - val[t]
        gae = delta + gamma * lam * gae * (1.0 - done[t])
        adv[t] = gae
        next_val = val[t]
    return adv, adv + val


def _behavior_clone(model: ActorCritic, cfg: LlcConfig, limits: BaseLimits,
                    seed: int, gen: torch.Generator, quiet: bool) -> None:
    """Regress the policy mean onto the model-based controller.

    States are gathered by rolling the teacher with exploration noise and
    relabeling every visited state, so the fit covers the neighborhood the
    stochastic policy will actually occupy early in training.
    """
    p = cfg.ppo
    teacher = AnalyticController(cfg, limits.height_nominal)
    env = LlcVecEnv(cfg, limits, 64, seed=seed + 101,
                    resample_every=p.resample_cmd_every)
    rng = np.random.default_rng(seed + 102)
    obs = env.reset()
    xs, ys = [], []
    for _ in range(400):
        u = teacher(obs)
        xs.append(obs.astype(np.float32))
        ys.append(u.astype(np.float32))
        noisy = np.clip(u + rng.normal(0.0, 0.15, u.shape), -1.0, 1.0)
        obs, _, _, _ = env.step(noisy)
    X = torch.as_tensor(np.concatenate(xs))
    Y = torch.as_tensor(np.concatenate(ys))
    opt = torch.optim.Adam(model.pi.parameters(), lr=1e-3)
    n = X.shape[0]
    for _ in range(40):
        perm = torch.randperm(n, generator=gen)
        for lo in range(0, n, 1024):
            idx = perm[lo:lo + 1024]
            loss = ((model.pi(X[idx]) - Y[idx]) ** 2).mean()
            opt.zero_grad()
            loss.backward()
            opt.step()
    with torch.no_grad():
        model.log_std.fill_(-1.5)
        final = ((model.pi(X) - Y) ** 2).mean().item()
    if not quiet:
        print(f"warm start: cloned controller, mse {final:.5f} on {n} states")


def train_ppo(cfg: LlcConfig, limits: BaseLimits, seed: int = 0,
              out_dir: str | Path | None = None, iters: int | None = None,
              time_budget_s: float | None = None, quiet: bool = True):
    """Train the controller; returns (model, metrics rows).

    Writes ``llc.ckpt`` and ``llc_curve.csv`` into ``out_dir`` when given.
    """
    p = cfg.ppo
    iters = p.iters if iters is None else iters
    torch.manual_seed(seed)
    gen = torch.Generator().manual_seed(seed + 1)
    env = LlcVecEnv(cfg, limits, p.n_envs, seed=seed + 2)
    model = ActorCritic(OBS_DIM, ACT_DIM, p.hidden, value_scale=1.0 / (1.0 - p.gamma))
    if p.warm_start:
        _behavior_clone(model, cfg, limits, seed, gen, quiet)
    opt = torch.optim.Adam([
        {"params": list(model.pi.parameters()) + [model.log_std], "lr": p.lr},
        {"params": list(model.vf.parameters()), "lr": p.lr},
    ])
    # hold the cloned policy fixed while the value head catches up, so the
    # first advantage estimates do not wreck the initialization
    vf_warm = 15 if p.warm_start else 0
    obs = env.reset()
    rows = []
    t_start = time.monotonic()
    for it in range(iters):
        decay = max(0.05, 1.0 - it / max(iters, 1))  # linear decay, floored
        opt.param_groups[0]["lr"] = 0.0 if it < vf_warm else p.lr * decay
        opt.param_groups[1]["lr"] = p.lr * decay
        obs_buf = np.zeros((p.rollout, p.n_envs, OBS_DIM), dtype=np.float32)
        act_buf = np.zeros((p.rollout, p.n_envs, ACT_DIM), dtype=np.float32)
        logp_buf = np.zeros((p.rollout, p.n_envs), dtype=np.float64)
        rew_buf = np.zeros((p.rollout, p.n_envs))
        val_buf = np.zeros((p.rollout, p.n_envs))
        done_buf = np.zeros((p.rollout, p.n_envs))
        term_val = np.zeros((p.rollout, p.n_envs))
        verr_sum = ori_sum = 0.0
        comp_sums = {}
        for t in range(p.rollout):
            a, logp, v = model.act(obs.astype(np.float32), gen)
            obs_buf[t] = obs
            act_buf[t] = a
            logp_buf[t] = logp
            val_buf[t] = v
            obs, rew, done, info = env.step(a)
            rew_buf[t] = rew
            done_buf[t] = done.astype(np.float64)
            if "terminal_obs" in info:
                with torch.no_grad():
                    term_val[t] = model.value(
                        torch.as_tensor(info["terminal_obs"], dtype=torch.float32)).numpy()
            verr_sum += float(np.mean(info["vel_err"]))
            ori_sum += float(np.mean(info["ori_pen"]))
            for k, val_c in info["components"].items():
                comp_sums[k] = comp_sums.get(k, 0.0) + val_c
        with torch.no_grad():
            last_val = model.value(torch.as_tensor(obs, dtype=torch.float32)).numpy()
        adv, ret = compute_gae(rew_buf, val_buf, done_buf, last_val, p.gamma, p.lam,
                               terminal_val=term_val)
        flat = lambda x: x.reshape(-1, *x.shape[2:])
        b_obs = torch.as_tensor(flat(obs_buf))
        b_act = torch.as_tensor(flat(act_buf))
        b_logp = torch.as_tensor(flat(logp_buf), dtype=torch.float32)
        b_adv = torch.as_tensor(flat(adv), dtype=torch.float32)
        b_adv = (b_adv - b_adv.mean()) / (b_adv.std() + 1e-8)
        b_ret = torch.as_tensor(flat(ret), dtype=torch.float32)
        n = b_obs.shape[0]
        for _ in range(p.epochs):
            perm = torch.randperm(n, generator=gen)
            for lo in range(0, n, p.minibatch):
                idx = perm[lo:lo + p.minibatch]
                loss = ppo_surrogate_loss(model, b_obs[idx], b_act[idx],
                                          b_logp[idx], b_adv[idx], b_ret[idx],
                                          p.clip, p.vf_coef, p.ent_coef)
                opt.zero_grad()
                loss.backward()
                nn.utils.clip_grad_norm_(model.parameters(), p.max_grad_norm)
                opt.step()
        row = {
            "iter": it,
            "steps": (it + 1) * p.rollout * p.n_envs,
            "reward": float(np.mean(rew_buf)),
            "vel_err": verr_sum / p.rollout,
            "ori_pen": ori_sum / p.rollout,
        }
        for k, ssum in comp_sums.items():
            row[k] = ssum / p.rollout
        rows.append(row)
        if not quiet and (it % 10 == 0 or it == iters - 1):
            print(f"iter {it:4d} reward {row['reward']:.3f} "
                  f"vel_err {row['vel_err']:.3f} ori {row['ori_pen']:.4f}")
        if time_budget_s is not None and time.monotonic() - t_start > time_budget_s:
            break
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        save_llc_checkpoint(out / "llc.ckpt", model, meta={"seed": seed})
        with open(out / "llc_curve.csv", "w", newline="") as fh:
            writer = csv.DictWriter(fh, fieldnames=list(rows[0].keys()))
            writer.writeheader()
            writer.writerows(rows)
    return model, rows


def evaluate_controller(controller, cfg: LlcConfig, limits: BaseLimits,
                        n_episodes: int = 100, seed: int = 123,
                        resample_every: int = 100, randomize: bool = True) -> dict:
    """Run full randomized episodes; returns mean tracking metrics.

    ``controller`` is any callable mapping an (n, obs) array to (n, act).
    """
    n_envs = min(n_episodes, 25)
    rounds = int(np.ceil(n_episodes / n_envs))
    env = LlcVecEnv(cfg, limits, n_envs, seed=seed, resample_every=resample_every,
                    randomize=randomize)
    verr, ori, rew_all = [], [], []
    for _ in range(rounds):
        obs = env.reset()
        for _ in range(cfg.ppo.episode_len):
            obs, rew, done, info = env.step(controller(obs))
            verr.append(np.mean(info["vel_err"]))
            ori.append(np.mean(info["ori_pen"]))
            rew_all.append(np.mean(rew))
    return {
        "mean_abs_vel_err": float(np.mean(verr)),
        "mean_ori_pen": float(np.mean(ori)),
        "mean_reward": float(np.mean(rew_all)),
        "episodes": n_envs * rounds,
    }


def save_llc_checkpoint(path, model: ActorCritic, meta: dict | None = None) -> None:
    info = {"obs_dim": model.obs_dim, "act_dim": model.act_dim,
            "value_scale": model.value_scale}
    info.update(meta or {})
    with ChunkWriter(path, kind="checkpoint", version=LLC_CHECKPOINT_VERSION,
                     meta=info) as w:
        for name, tensor in model.state_dict().items():
            w.add_array(f"param/{name}", tensor.detach().numpy())


def load_llc_checkpoint(path) -> ActorCritic:
    r = ChunkReader(path, expect_kind="checkpoint")
    if r.version != LLC_CHECKPOINT_VERSION:
        raise IOError(f"{path}: unsupported checkpoint version {r.version}")
    names = [n[len("param/"):] for n in r.chunks if n.startswith("param/")]
    hidden = r.array("param/pi.0.weight").shape[0]
    model = ActorCritic(int(r.meta["obs_dim"]), int(r.meta["act_dim"]), hidden,
                        value_scale=float(r.meta.get("value_scale", 1.0)))
    state = {n: torch.from_numpy(r.array(f"param/{n}").copy()) for n in names}
    model.load_state_dict(state)
    return model
