"""Phase head math, encoder shapes and the conditioning latent layout."""

import numpy as np
import pytest
import scipy.special
import torch
from hypothesis import given, settings
from hypothesis import strategies as st

from falcon.config import RunConfig
from falcon.coordinator import (Coordinator, assemble_z, latent_dim,
                                normalize_rows, phase_distribution,
                                phase_logits, phase_outputs, progress_scalar,
                                sigmoid, softmax, stage_completion, tokenize,
                                z_slices)
from falcon.coordinator.encoders import (ImageEncoder, TextEncoder,
                                         TEXT_MAX_TOKENS, TEXT_VOCAB,
                                         images_to_tensor)
from falcon.world import observe, reset_task


def small_cfg() -> RunConfig:
    cfg = RunConfig()
    cfg.encoder.d_f = 16
    cfg.encoder.d_model = 32
    cfg.encoder.text_hidden = 24
    cfg.encoder.n_heads = 2
    return cfg


# ------------------------------------------------------------------ analytic


def test_softmax_uniform_on_equal_logits():
    rho = softmax(np.full(4, 0.37))
    assert np.all(np.abs(rho - 0.25) <= 1e-12)


def test_softmax_matches_scipy():
    rng = np.random.default_rng(0)
    for _ in range(50):
        x = rng.normal(size=(3, 7)) * rng.uniform(0.1, 30.0)
        assert np.allclose(softmax(x), scipy.special.softmax(x, axis=-1),
                           atol=1e-12)


def test_softmax_extreme_logits_stable():
    x = np.array([1000.0, -1000.0, 0.0])
    s = softmax(x)
    assert np.isfinite(s).all() and abs(s.sum() - 1.0) <= 1e-12


def test_sigmoid_at_zero_and_scipy():
    assert sigmoid(np.array([0.0]))[0] == 0.5
    rng = np.random.default_rng(1)
    x = rng.normal(scale=20, size=500)
    assert np.allclose(sigmoid(x), scipy.special.expit(x), atol=1e-12)


def test_progress_formula_constructed_cases():
    rng = np.random.default_rng(2)
    for _ in range(20):
        k_dim = int(rng.integers(2, 7))
        rho = rng.dirichlet(np.ones(k_dim))
        c = rng.uniform(size=k_dim)
        # independent reference: explicit argmax walk
        best = 0
        for j in range(1, k_dim):
            if rho[j] > rho[best]:
                best = j
        expected = (best + c[best]) / k_dim
        assert abs(progress_scalar(rho, c) - expected) <= 1e-12


def test_progress_tie_breaks_to_lowest_stage():
    rho = np.array([0.3, 0.3, 0.2, 0.2])
    c = np.array([0.25, 0.9, 0.9, 0.9])
    assert abs(progress_scalar(rho, c) - (0 + 0.25) / 4) <= 1e-12


def test_progress_batched_matches_scalar():
    rng = np.random.default_rng(3)
    rho = rng.dirichlet(np.ones(4), size=8)
    c = rng.uniform(size=(8, 4))
    batched = progress_scalar(rho, c)
    for i in range(8):
        assert abs(batched[i] - progress_scalar(rho[i], c[i])) <= 1e-12


@given(st.integers(0, 2 ** 32 - 1))
@settings(max_examples=40, deadline=None)
def test_progress_always_in_unit_interval(seed):
    rng = np.random.default_rng(seed)
    f = normalize_rows(rng.normal(size=6))
    e_on = normalize_rows(rng.normal(size=(4, 6)))
    e_done = normalize_rows(rng.normal(size=(4, 6)))
    rho, c, p = phase_outputs(f, e_on, e_done, alpha=10.0)
    assert abs(rho.sum() - 1.0) <= 1e-9
    assert np.all((c > 0.0) & (c < 1.0))
    assert 0.0 <= p < 1.0


def test_completion_matches_direct_formula():
    rng = np.random.default_rng(4)
    f = normalize_rows(rng.normal(size=6))
    e_on = normalize_rows(rng.normal(size=(4, 6)))
    e_done = normalize_rows(rng.normal(size=(4, 6)))
    c = stage_completion(f, e_on, e_done, alpha=10.0)
    for k in range(4):
        direct = scipy.special.expit(10.0 * (f @ e_done[k] - f @ e_on[k]))
        assert abs(c[k] - direct) <= 1e-12
    logits = phase_logits(f, e_on)
    assert np.allclose(logits, e_on @ f, atol=1e-15)


# ------------------------------------------------------------ latent layout


def test_latent_layout_slices():
    cfg = RunConfig()
    d, k = cfg.encoder.d_model, cfg.encoder.n_stages
    sl = z_slices(cfg)
    h = np.arange(d, dtype=np.float32)
    rho = np.full(k, 0.25, dtype=np.float32)
    z = assemble_z(h, rho, 0.625)
    assert z.shape == (latent_dim(cfg),) == (d + k + 1,)
    assert np.array_equal(z[sl["h"]], h)
    assert np.array_equal(z[sl["rho"]], rho)
    assert z[sl["p"]][0] == np.float32(0.625)


# ----------------------------------------------------------------- encoders


def test_tokenizer_deterministic_and_bounded():
    ids = tokenize("Put the toy into the drawer!")
    assert ids == tokenize("put the toy into the drawer")
    assert len(ids) <= TEXT_MAX_TOKENS
    assert all(1 <= i < TEXT_VOCAB for i in ids)
    assert tokenize("open the drawer") != tokenize("close the drawer")


def test_image_encoder_shapes():
    cfg = small_cfg()
    enc = ImageEncoder(cfg.encoder)
    x = images_to_tensor(np.zeros((2, 96, 96, 3), dtype=np.uint8))
    assert x.shape == (2, 3, 96, 96)
    with torch.no_grad():
        out = enc(x)
    assert out.shape == (2, 16)


def test_text_encoder_shapes_and_padding_invariance():
    cfg = small_cfg()
    enc = TextEncoder(cfg.encoder)
    with torch.no_grad():
        out = enc.encode_batch(["open the drawer", "a much longer sentence "
                                "about placing the toy into the drawer"])
    assert out.shape == (2, 16)
    with torch.no_grad():
        solo = enc.encode_batch(["open the drawer"])
    assert torch.allclose(out[0], solo[0], atol=1e-6)


def test_coordinator_encode_frame_contract():
    torch.manual_seed(0)
    cfg = small_cfg()
    coord = Coordinator(cfg)
    state = reset_task(cfg.world, "task1", "center", seed=3)
    obs = observe(cfg.world, state, coord.task_spec("task1").instruction)
    enc = coord.encode_frame(obs, "task1")
    k = cfg.encoder.n_stages
    assert enc.h.shape == (32,)
    assert enc.img_emb.shape == (3, 16)
    assert enc.rho.shape == (k,) and abs(enc.rho.sum() - 1.0) <= 1e-5
    assert 0.0 <= enc.p < 1.0
    assert enc.z.shape == (latent_dim(cfg),)
    sl = z_slices(cfg)
    assert np.allclose(enc.z[sl["h"]], enc.h)
    assert np.allclose(enc.z[sl["rho"]], enc.rho)
    assert abs(enc.z[sl["p"]][0] - enc.p) <= 1e-6
    assert abs(np.linalg.norm(enc.f) - 1.0) <= 1e-5
    enc2 = coord.encode_frame(obs, "task1")
    assert np.array_equal(enc.z, enc2.z)


def test_zero_phase_variant_blanks_phase_block():
    torch.manual_seed(0)
    cfg = small_cfg()
    coord = Coordinator(cfg, zero_phase=True)
    state = reset_task(cfg.world, "task2", "center", seed=5)
    obs = observe(cfg.world, state, coord.task_spec("task2").instruction)
    enc = coord.encode_frame(obs, "task2")
    sl = z_slices(cfg)
    assert np.all(enc.z[sl["rho"]] == 0.0)
    assert enc.z[sl["p"]][0] == 0.0
    assert np.any(enc.z[sl["h"]] != 0.0)
    # the phase fields themselves are still reported
    assert abs(enc.rho.sum() - 1.0) <= 1e-5


def test_freeze_perception_splits_trainable_sets():
    cfg = small_cfg()
    coord = Coordinator(cfg)
    coord.freeze_perception()
    assert all(not p.requires_grad for p in coord.image.parameters())
    assert all(not p.requires_grad for p in coord.text.parameters())
    assert all(p.requires_grad for p in coord.fusion.parameters())
    assert all(p.requires_grad for p in coord.proprio.parameters())


def test_fuse_cached_batch_shape():
    torch.manual_seed(0)
    cfg = small_cfg()
    coord = Coordinator(cfg)
    img = torch.randn(5, 3, 16)
    prop = torch.randn(5, cfg.encoder.proprio_dim)
    h = coord.fuse_cached(img, prop, "task1")
    assert h.shape == (5, 32)


def test_unknown_task_rejected():
    cfg = small_cfg()
    coord = Coordinator(cfg)
    with pytest.raises(KeyError):
        coord.phase_from_image_emb(np.zeros((1, 3, 16)), "task9")
