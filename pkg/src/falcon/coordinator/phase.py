"""Language-defined phase distribution and scalar progress.

Each task stage k carries two captions: one describing the stage while it
is underway and one describing its completed end state.  Comparing a fused
visual embedding against both caption embeddings yields a distribution
over active stages and a gated per-stage completion, which combine into a
single monotone progress scalar in [0, 1).

All functions are plain numpy and operate on unit-normalized embeddings;
batched variants accept a leading batch axis.
"""

from __future__ import annotations

import numpy as np

__all__ = [
    "softmax", "sigmoid", "normalize_rows", "phase_logits",
    "phase_distribution", "stage_completion", "progress_scalar",
    "phase_outputs",
]


def softmax(x: np.ndarray, axis: int = -1) -> np.ndarray:
    z = x - np.max(x, axis=axis, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=axis, keepdims=True)


def sigmoid(x: np.ndarray) -> np.ndarray:
    out = np.empty_like(x, dtype=float)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def normalize_rows(x: np.ndarray, eps: float = 1e-8) -> np.ndarray:
    n = np.linalg.norm(x, axis=-1, keepdims=True)
    return x / np.maximum(n, eps)


def phase_logits(f: np.ndarray, e_ongoing: np.ndarray) -> np.ndarray:
    """Similarity of the fused frame embedding to each ongoing-stage caption.

    f: (..., d) unit embedding; e_ongoing: (K, d) unit caption embeddings.
    Returns (..., K).
    """
    return f @ e_ongoing.T


def phase_distribution(logits: np.ndarray) -> np.ndarray:
    return softmax(logits, axis=-1)


def stage_completion(f: np.ndarray, e_ongoing: np.ndarray,
                     e_done: np.ndarray, alpha: float) -> np.ndarray:
    """Per-stage completion gate c_k = sigmoid(alpha * (s_done - s_ongoing))."""
    return sigmoid(alpha * (f @ e_done.T - f @ e_ongoing.T))


def progress_scalar(rho: np.ndarray, c: np.ndarray) -> np.ndarray:
    """p = (k* + c_{k*}) / K with k* the argmax stage (ties -> lowest index).

    rho, c: (..., K).  Returns (...,) in [0, 1).
    """
    rho = np.asarray(rho, dtype=float)
    c = np.asarray(c, dtype=float)
    k = np.argmax(rho, axis=-1)
    ck = np.take_along_axis(c, k[..., None], axis=-1)[..., 0]
    return (k + ck) / rho.shape[-1]


def phase_outputs(f: np.ndarray, e_ongoing: np.ndarray, e_done: np.ndarray,
                  alpha: float) -> tuple:
    """Convenience bundle: (rho, c, p) from a fused embedding and captions."""
    rho = phase_distribution(phase_logits(f, e_ongoing))
    c = stage_completion(f, e_ongoing, e_done, alpha)
    return rho, c, progress_scalar(rho, c)
