"""Vision, language and proprioception encoders plus the shallow fusion
transformer that produces the shared conditioning vector.

The image and text encoders are trained once with a contrastive alignment
objective against simulator-derived captions, then frozen; the proprio
encoder and fusion transformer stay trainable and are optimized jointly
with the policies.
"""

from __future__ import annotations

import re
import zlib

import numpy as np
import torch
import torch.nn as nn

from ..config import EncoderConfig

__all__ = [
    "ImageEncoder", "TextEncoder", "ProprioEncoder", "FusionEncoder",
    "images_to_tensor", "tokenize", "TEXT_VOCAB", "TEXT_MAX_TOKENS",
]

TEXT_VOCAB = 2048
TEXT_MAX_TOKENS = 32
_WORD_RE = re.compile(r"[a-z0-9]+")


def images_to_tensor(imgs: np.ndarray) -> torch.Tensor:
    """uint8 (..., H, W, 3) -> float tensor (..., 3, H, W) in roughly [-.5, .5]."""
    # the float conversion copies, so read-only buffers are safe to pass in
    x = torch.from_numpy(np.ascontiguousarray(imgs, dtype=np.float32))
    x = x / 255.0 - 0.45
    return x.movedim(-1, -3)


def tokenize(text: str) -> list:
    """Deterministic hashed unigram+bigram token ids in [1, TEXT_VOCAB)."""
    words = _WORD_RE.findall(text.lower())
    grams = words + [a + "_" + b for a, b in zip(words, words[1:])]
    ids = [1 + zlib.crc32(g.encode()) % (TEXT_VOCAB - 1) for g in grams]
    return ids[:TEXT_MAX_TOKENS]


class ImageEncoder(nn.Module):
    """Small strided conv net: (3, R, R) -> d_f."""

    def __init__(self, cfg: EncoderConfig):
        super().__init__()
        chans = (3, 16, 32, 64, 64)
        blocks = []
        for cin, cout in zip(chans, chans[1:]):
            blocks += [nn.Conv2d(cin, cout, 3, stride=2, padding=1),
                       nn.GroupNorm(4, cout), nn.SiLU()]
        self.conv = nn.Sequential(*blocks)
        self.head = nn.Linear(chans[-1], cfg.d_f)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        z = self.conv(x)
        return self.head(z.mean(dim=(-2, -1)))


class TextEncoder(nn.Module):
    """Hashed bag-of-ngrams embedding with an MLP head: token ids -> d_f."""

    def __init__(self, cfg: EncoderConfig):
        super().__init__()
        self.table = nn.Embedding(TEXT_VOCAB, cfg.text_hidden, padding_idx=0)
        self.head = nn.Sequential(
            nn.Linear(cfg.text_hidden, cfg.text_hidden), nn.SiLU(),
            nn.Linear(cfg.text_hidden, cfg.d_f))

    def encode_batch(self, texts: list) -> torch.Tensor:
        ids = torch.zeros(len(texts), TEXT_MAX_TOKENS, dtype=torch.long)
        for i, t in enumerate(texts):
            toks = tokenize(t)
            ids[i, :len(toks)] = torch.tensor(toks, dtype=torch.long)
        return self.forward(ids)

    def forward(self, ids: torch.Tensor) -> torch.Tensor:
        mask = (ids != 0).float().unsqueeze(-1)
        emb = self.table(ids) * mask
        pooled = emb.sum(dim=-2) / mask.sum(dim=-2).clamp_min(1.0)
        return self.head(pooled)


class ProprioEncoder(nn.Module):
    """Normalizing MLP over the proprioception vector -> d_f.

    Normalization statistics are buffers set once from the training set so
    they persist in checkpoints.
    """

    def __init__(self, cfg: EncoderConfig):
        super().__init__()
        self.register_buffer("mean", torch.zeros(cfg.proprio_dim))
        self.register_buffer("std", torch.ones(cfg.proprio_dim))
        self.net = nn.Sequential(
            nn.Linear(cfg.proprio_dim, 64), nn.SiLU(), nn.Linear(64, cfg.d_f))

    def set_stats(self, mean: np.ndarray, std: np.ndarray) -> None:
        self.mean.copy_(torch.as_tensor(mean, dtype=torch.float32))
        self.std.copy_(torch.as_tensor(std, dtype=torch.float32).clamp_min(1e-6))

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        return self.net((x - self.mean) / self.std)


class FusionEncoder(nn.Module):
    """Shallow transformer over [CLS, wrist, body, head, proprio, text] tokens.

    Inputs are the d_f embeddings from the per-modality encoders; output is
    the fused vector h of width d_model taken at the CLS position.
    """

    N_TOKENS = 6  # cls + 3 views + proprio + text

    def __init__(self, cfg: EncoderConfig):
        super().__init__()
        d = cfg.d_model
        self.proj_img = nn.Linear(cfg.d_f, d)
        self.proj_prop = nn.Linear(cfg.d_f, d)
        self.proj_text = nn.Linear(cfg.d_f, d)
        self.pos = nn.Parameter(torch.zeros(self.N_TOKENS, d))
        self.cls = nn.Parameter(torch.zeros(d))
        layer = nn.TransformerEncoderLayer(
            d_model=d, nhead=cfg.n_heads, dim_feedforward=2 * d,
            dropout=0.0, batch_first=True, norm_first=True)
        self.encoder = nn.TransformerEncoder(layer, num_layers=cfg.fusion_layers,
                                             enable_nested_tensor=False)
        self.out_norm = nn.LayerNorm(d)
        nn.init.normal_(self.pos, std=0.02)
        nn.init.normal_(self.cls, std=0.02)

    def forward(self, img_emb: torch.Tensor, prop_emb: torch.Tensor,
                text_emb: torch.Tensor) -> torch.Tensor:
        """img_emb (B, 3, d_f); prop_emb (B, d_f); text_emb (B, d_f) -> (B, d_model)."""
        b = img_emb.shape[0]
        tokens = torch.cat([
            self.cls.expand(b, 1, -1),
            self.proj_img(img_emb),
            self.proj_prop(prop_emb).unsqueeze(1),
            self.proj_text(text_emb).unsqueeze(1),
        ], dim=1)
        tokens = tokens + self.pos
        return self.out_norm(self.encoder(tokens)[:, 0])
