"""Contrastive objective oracles: uniform-logit closed forms, derangement
properties and finite-difference gradients through both projection heads."""

import math

import numpy as np
import pytest
import torch

from falcon.config import LossConfig
from falcon.coordloss import (CoordinationLoss, ProjectionHead, derangement,
                              info_nce, mismatched_composites,
                              summarize_chunks, summarize_latents)


# ------------------------------------------------------------- closed forms


@pytest.mark.parametrize("b", [2, 4, 8])
def test_uniform_logits_give_log_3b(b):
    """All-equal similarities make InfoNCE exactly ln(#candidates)."""
    v = torch.ones(b, 5) / math.sqrt(5.0)
    w = v.repeat(3, 1)
    loss = info_nce(v, w, tau=0.1)
    assert abs(loss.item() - math.log(3 * b)) <= 1e-6
    loss_small = info_nce(v, v, tau=0.1)
    assert abs(loss_small.item() - math.log(b)) <= 1e-6


def test_degenerate_batch_hits_uniform_oracle():
    """Identical samples collapse the full loss to its uniform value."""
    torch.manual_seed(0)
    b = 4
    cfg = LossConfig(tau=0.1, delta=0.1, d_c=6, proj_hidden=8)
    mod = CoordinationLoss(z_dim=7, act_sum_dim=8, arm_dim=3, cfg=cfg)
    z = torch.randn(1, 7).repeat(b, 1)
    u = torch.randn(1, 8).repeat(b, 1)
    lam = torch.tensor([1, 2, 3, 0])
    loss = mod(z, u, lam)
    expected = 0.5 * (math.log(3 * b) + math.log(b))
    assert abs(loss.item() - expected) <= 1e-6


def test_info_nce_prefers_aligned_pairs():
    torch.manual_seed(1)
    v = torch.nn.functional.normalize(torch.randn(6, 4), dim=-1)
    aligned = info_nce(v, v, tau=0.1)
    shuffled = info_nce(v, v[torch.randperm(6)], tau=0.1)
    assert aligned.item() < shuffled.item()


# -------------------------------------------------------------- derangement


@pytest.mark.parametrize("n", [2, 3, 5, 17])
def test_derangement_has_no_fixed_points(n):
    rng = np.random.default_rng(n)
    draws = 10000 // n
    for _ in range(draws):
        perm = derangement(n, rng)
        assert np.all(perm != np.arange(n))
        assert np.array_equal(np.sort(perm), np.arange(n))


def test_derangement_of_two_is_the_swap():
    rng = np.random.default_rng(0)
    for _ in range(20):
        assert np.array_equal(derangement(2, rng), [1, 0])


def test_derangement_of_one_rejected():
    with pytest.raises(ValueError):
        derangement(1, np.random.default_rng(0))


def test_derangement_of_three_roughly_uniform():
    """n=3 has exactly two derangements; both should appear ~equally."""
    rng = np.random.default_rng(42)
    counts = {(1, 2, 0): 0, (2, 0, 1): 0}
    n = 2000
    for _ in range(n):
        counts[tuple(derangement(3, rng))] += 1
    frac = counts[(1, 2, 0)] / n
    assert abs(frac - 0.5) <= 0.05


# ------------------------------------------------------------- summarizers


def test_summaries_are_plain_means():
    rng = np.random.default_rng(2)
    z_seq = torch.as_tensor(rng.normal(size=(3, 2, 5)))
    assert torch.allclose(summarize_latents(z_seq), z_seq.mean(dim=1))
    arm = torch.as_tensor(rng.normal(size=(3, 8, 3)))
    base = torch.as_tensor(rng.normal(size=(3, 8, 5)))
    u = summarize_chunks(arm, base)
    assert u.shape == (3, 8)
    assert torch.allclose(u[:, :3], arm.mean(dim=1))
    assert torch.allclose(u[:, 3:], base.mean(dim=1))


def test_mismatched_composites_swap_the_right_half():
    u = torch.arange(12.0).reshape(3, 4)  # arm_dim = 1
    lam = torch.tensor([1, 2, 0])
    keep_arm, keep_base = mismatched_composites(u, 1, lam)
    assert torch.equal(keep_arm[:, 0], u[:, 0])          # own arm
    assert torch.equal(keep_arm[:, 1:], u[lam, 1:])      # partner base
    assert torch.equal(keep_base[:, 1:], u[:, 1:])       # own base
    assert torch.equal(keep_base[:, 0], u[lam, 0])       # partner arm


def test_projection_head_outputs_unit_norm():
    torch.manual_seed(3)
    head = ProjectionHead(5, 16, 4)
    out = head(torch.randn(10, 5))
    assert torch.allclose(out.norm(dim=-1), torch.ones(10), atol=1e-6)


# ---------------------------------------------------------------- gradients


def test_coordination_loss_gradient_matches_finite_differences():
    torch.manual_seed(4)
    cfg = LossConfig(tau=0.1, delta=0.1, d_c=4, proj_hidden=8)
    mod = CoordinationLoss(z_dim=6, act_sum_dim=8, arm_dim=3, cfg=cfg).double()
    assert sum(p.numel() for p in mod.parameters()) <= 1000
    b = 5
    z = torch.randn(b, 6, dtype=torch.float64)
    u = torch.randn(b, 8, dtype=torch.float64)
    lam = torch.tensor([1, 2, 3, 4, 0])

    loss = mod(z, u, lam)
    loss.backward()
    grads = {n: p.grad.clone() for n, p in mod.named_parameters()}

    rng = np.random.default_rng(5)
    worst = 0.0
    checked = 0
    for name, param in mod.named_parameters():
        flat = param.data.view(-1)
        idxs = rng.choice(flat.numel(), size=min(8, flat.numel()), replace=False)
        for i in idxs:
            orig = flat[i].item()
            h = 1e-6
            flat[i] = orig + h
            up = mod(z, u, lam).item()
            flat[i] = orig - h
            dn = mod(z, u, lam).item()
            flat[i] = orig
            fd = (up - dn) / (2 * h)
            ad = grads[name].view(-1)[i].item()
            scale = max(abs(fd), abs(ad), 1e-8)
            worst = max(worst, abs(fd - ad) / scale)
            checked += 1
    assert checked >= 50
    assert worst <= 1e-4, f"worst relative gradient error {worst:.2e}"


def test_gradient_reaches_both_heads():
    torch.manual_seed(6)
    cfg = LossConfig(tau=0.1, delta=0.1, d_c=4, proj_hidden=8)
    mod = CoordinationLoss(z_dim=6, act_sum_dim=8, arm_dim=3, cfg=cfg)
    loss = mod(torch.randn(4, 6), torch.randn(4, 8), torch.tensor([1, 0, 3, 2]))
    loss.backward()
    for name, p in mod.named_parameters():
        assert p.grad is not None and p.grad.abs().sum() > 0.0, name
