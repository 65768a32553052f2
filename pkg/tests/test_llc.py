"""Low-level controller: orientation math against an independent rotation
oracle, reward identities, dynamics sanity, analytic tracking, and the
clipped-surrogate gradient against central finite differences."""

import math

import numpy as np
import pytest
import torch
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.spatial.transform import Rotation

from falcon.config import default_config
from falcon.llc import (
    ActorCritic, AnalyticController, DynParams, DynState, LlcVecEnv,
    build_obs, compute_gae, desired_gravity, dynamics_step, evaluate_controller,
    gravity_in_body, load_llc_checkpoint, orientation_penalty,
    ppo_surrogate_loss, quat_from_euler_zyx, reward_components, sample_params,
    save_llc_checkpoint, total_reward,
)
from falcon.llc.types import OBS_DIM, ACT_DIM

CFG = default_config()


# ------------------------------------------------------------- orientation

def test_desired_gravity_flat_identity():
    g = desired_gravity(0.0, 0.0)
    assert np.array_equal(g, np.array([0.0, 0.0, -1.0]))


def test_desired_gravity_pitch_frozen_value():
    g = desired_gravity(0.0, 0.2)
    assert g[0] == pytest.approx(0.19866933079506122, abs=1e-12)
    assert g[1] == pytest.approx(0.0, abs=1e-12)
    assert g[2] == pytest.approx(-0.9800665778412416, abs=1e-12)


@given(st.floats(-1.2, 1.2), st.floats(-1.2, 1.2))
@settings(max_examples=60, deadline=None)
def test_desired_gravity_matches_scipy(roll, pitch):
    # oracle: rotate world down-vector into the commanded body frame
    want = Rotation.from_euler("ZYX", [0.0, pitch, roll]).inv().apply([0, 0, -1.0])
    got = desired_gravity(roll, pitch)
    assert np.allclose(got, want, atol=1e-12)
    assert abs(np.linalg.norm(got) - 1.0) < 1e-12


@given(st.floats(-1.2, 1.2), st.floats(-1.2, 1.2))
@settings(max_examples=40, deadline=None)
def test_gravity_in_body_matches_desired(roll, pitch):
    assert np.allclose(gravity_in_body(roll, pitch), desired_gravity(roll, pitch),
                       atol=1e-12)


def test_quat_unit_norm():
    q = quat_from_euler_zyx(0.3, -0.5, 0.9)
    assert abs(np.linalg.norm(q) - 1.0) < 1e-12


def test_orientation_penalty_zero_at_match():
    g = desired_gravity(0.05, 0.3)
    assert orientation_penalty(g, g) == 0.0


def test_orientation_penalty_xy_only():
    # z mismatch alone contributes nothing
    a = np.array([0.1, 0.2, -0.97])
    b = np.array([0.1, 0.2, 0.5])
    assert orientation_penalty(a, b) == 0.0
    c = np.array([0.0, 0.2, -0.97])
    assert orientation_penalty(a, c) == pytest.approx(0.01)


# ------------------------------------------------------------------ rewards

def test_reward_perfect_tracking_maxed():
    w = CFG.llc.rewards
    cmd = np.array([0.3, -0.1, 0.2, 0.1, 0.32])
    g = desired_gravity(0.0, cmd[3])
    u = np.zeros(5)
    comps = reward_components(w, cmd[:2], cmd[2], cmd, cmd[4], g, g, u, u)
    assert comps["track_v"] == pytest.approx(w.w_v)
    assert comps["track_h"] == pytest.approx(w.w_h)
    assert comps["pen_ori"] == 0.0 and comps["pen_act"] == 0.0
    assert total_reward(comps) == pytest.approx(w.w_v + w.w_h)


def test_reward_monotone_in_errors():
    w = CFG.llc.rewards
    cmd = np.zeros(5)
    cmd[4] = 0.30
    g = desired_gravity(0.0, 0.0)
    u = np.zeros(5)
    r0 = total_reward(reward_components(w, [0.0, 0.0], 0.0, cmd, 0.30, g, g, u, u))
    r1 = total_reward(reward_components(w, [0.2, 0.0], 0.0, cmd, 0.30, g, g, u, u))
    r2 = total_reward(reward_components(w, [0.4, 0.0], 0.0, cmd, 0.30, g, g, u, u))
    assert r0 > r1 > r2
    # action-rate penalty bites
    r3 = total_reward(reward_components(w, [0.0, 0.0], 0.0, cmd, 0.30, g, g,
                                        np.ones(5), np.zeros(5)))
    assert r3 == pytest.approx(r0 - w.w_u * 5.0)


# ----------------------------------------------------------------- dynamics

def test_dynamics_deterministic_without_noise():
    s = DynState.rest(3, 0.30)
    params = DynParams.nominal(3)
    u = np.tile(np.array([0.5, -0.2, 0.1, 0.0, 0.0]), (3, 1))
    a = dynamics_step(CFG.llc, CFG.world.limits, s, u, params)
    b = dynamics_step(CFG.llc, CFG.world.limits, s, u, params)
    assert np.array_equal(a.v, b.v) and np.array_equal(a.th, b.th)
    # and the input state is untouched
    assert np.array_equal(s.v, np.zeros((3, 2)))


def test_dynamics_velocity_approaches_force_balance():
    s = DynState.rest(1, 0.30)
    params = DynParams.nominal(1)
    u = np.array([[0.5, 0.0, 0.0, 0.0, 0.0]])
    for _ in range(2000):
        s = dynamics_step(CFG.llc, CFG.world.limits, s, u, params)
    v_eq = 0.5 * CFG.llc.act_scale[0] / params.drag[0]
    assert s.v[0, 0] == pytest.approx(v_eq, rel=1e-3)


def test_dynamics_height_spring_returns_to_nominal():
    s = DynState.rest(1, 0.30)
    s.h[0] = 0.38
    params = DynParams.nominal(1)
    u = np.zeros((1, 5))
    for _ in range(600):
        s = dynamics_step(CFG.llc, CFG.world.limits, s, u, params)
    assert s.h[0] == pytest.approx(CFG.world.limits.height_nominal, abs=1e-3)


@given(st.integers(0, 2**31 - 1))
@settings(max_examples=30, deadline=None)
def test_domain_randomization_within_ranges(seed):
    dr = CFG.llc.dr
    p = sample_params(dr, np.random.default_rng(seed), 16)
    assert np.all((p.mass >= dr.mass_scale[0]) & (p.mass <= dr.mass_scale[1]))
    assert np.all((p.drag >= dr.drag[0]) & (p.drag <= dr.drag[1]))
    assert np.all((p.push >= dr.push_std[0]) & (p.push <= dr.push_std[1]))


def test_env_obs_shape_and_reset():
    env = LlcVecEnv(CFG.llc, CFG.world.limits, 4, seed=3)
    obs = env.reset()
    assert obs.shape == (4, OBS_DIM)
    obs2, rew, done, info = env.step(np.zeros((4, ACT_DIM)))
    assert obs2.shape == (4, OBS_DIM) and rew.shape == (4,)
    assert not done.any()
    assert "vel_err" in info and "ori_pen" in info


# ----------------------------------------------------- analytic controller

def test_analytic_step_response_settles_fast():
    ctrl = AnalyticController(CFG.llc, CFG.world.limits.height_nominal)
    s = DynState.rest(1, 0.30)
    params = DynParams.nominal(1)
    cmd = np.array([[0.3, 0.0, 0.0, 0.0, 0.30]])
    prev_u = np.zeros((1, 5))
    settle_t = None
    for t in range(100):  # 2 s at 50 Hz
        u = ctrl(build_obs(s, cmd, prev_u))
        s = dynamics_step(CFG.llc, CFG.world.limits, s, u, params)
        prev_u = u
        if settle_t is None and abs(s.v[0, 0] - 0.3) <= 0.03:
            settle_t = (t + 1) * CFG.llc.dt
    assert settle_t is not None and settle_t < 2.0
    assert abs(s.v[0, 0] - 0.3) <= 0.03  # and it stays settled


def test_analytic_tracks_posture_commands():
    ctrl = AnalyticController(CFG.llc, CFG.world.limits.height_nominal)
    s = DynState.rest(1, 0.30)
    params = DynParams.nominal(1)
    cmd = np.array([[0.0, 0.0, 0.0, 0.25, 0.34]])
    prev_u = np.zeros((1, 5))
    for _ in range(150):
        u = ctrl(build_obs(s, cmd, prev_u))
        s = dynamics_step(CFG.llc, CFG.world.limits, s, u, params)
        prev_u = u
    assert s.th[0] == pytest.approx(0.25, abs=0.02)
    assert s.h[0] == pytest.approx(0.34, abs=0.01)


# --------------------------------------------------------------------- ppo

def _tiny_batch(model, n=16, seed=0):
    g = torch.Generator().manual_seed(seed)
    obs = torch.randn(n, model.obs_dim, generator=g, dtype=torch.float64)
    act = torch.randn(n, model.act_dim, generator=g, dtype=torch.float64) * 0.5
    old_logp = model.dist(obs).log_prob(act).sum(-1).detach() \
        + 0.05 * torch.randn(n, generator=g, dtype=torch.float64)
    adv = torch.randn(n, generator=g, dtype=torch.float64)
    ret = torch.randn(n, generator=g, dtype=torch.float64)
    return obs, act, old_logp, adv, ret


def test_ppo_surrogate_gradient_matches_finite_differences():
    torch.manual_seed(0)
    model = ActorCritic(obs_dim=6, act_dim=2, hidden=8).double()
    n_params = sum(p.numel() for p in model.parameters())
    assert n_params <= 1000
    batch = _tiny_batch(model)

    loss = ppo_surrogate_loss(model, *batch)
    loss.backward()
    grads = torch.cat([p.grad.reshape(-1) for p in model.parameters()]).numpy()

    eps = 1e-6
    flat = torch.cat([p.detach().reshape(-1) for p in model.parameters()]).numpy().copy()

    def loss_at(theta):
        i = 0
        with torch.no_grad():
            for p in model.parameters():
                k = p.numel()
                p.copy_(torch.from_numpy(theta[i:i + k]).reshape(p.shape))
                i += k
        return float(ppo_surrogate_loss(model, *batch))

    rng = np.random.default_rng(1)
    idx = rng.choice(n_params, size=120, replace=False)
    worst = 0.0
    for j in idx:
        theta = flat.copy()
        theta[j] += eps
        up = loss_at(theta)
        theta[j] -= 2 * eps
        dn = loss_at(theta)
        fd = (up - dn) / (2 * eps)
        denom = max(abs(fd), abs(grads[j]), 1e-8)
        worst = max(worst, abs(fd - grads[j]) / denom)
    assert worst <= 1e-4


def test_gae_matches_direct_recursion():
    rng = np.random.default_rng(0)
    T, N = 12, 3
    rew = rng.normal(size=(T, N))
    val = rng.normal(size=(T, N))
    done = np.zeros((T, N))
    done[5, 1] = 1.0
    term = rng.normal(size=(T, N))
    last = rng.normal(size=N)
    gamma, lam = 0.99, 0.95
    adv, ret = compute_gae(rew, val, done, last, gamma, lam, terminal_val=term)
    # scalar re-derivation for env 0 (no done flags)
    gae = 0.0
    expect = np.zeros(T)
    next_val = last[0]
    for t in range(T - 1, -1, -1):
        delta = rew[t, 0] + gamma * next_val - val[t, 0]
        gae = delta + gamma * lam * gae
        expect[t] = gae
        next_val = val[t, 0]
    assert np.allclose(adv[:, 0], expect, atol=1e-12)
    # dones cut credit flow: advantage at the done step uses terminal value
    assert adv[5, 1] == pytest.approx(rew[5, 1] + gamma * term[5, 1] - val[5, 1])
    assert np.allclose(ret, adv + val)


def test_llc_checkpoint_round_trip(tmp_path):
    torch.manual_seed(3)
    model = ActorCritic(hidden=16, value_scale=100.0)
    path = tmp_path / "llc.ckpt"
    save_llc_checkpoint(path, model, meta={"seed": 3})
    loaded = load_llc_checkpoint(path)
    assert loaded.value_scale == 100.0
    obs = np.random.default_rng(0).normal(size=(5, OBS_DIM)).astype(np.float32)
    assert np.array_equal(model.mean_action(obs), loaded.mean_action(obs))
