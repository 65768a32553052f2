"""Per-dimension affine normalization for action chunks.

Actions are scaled into [-1, 1] by data range rather than z-scored: the
denoiser's output clamp sits just outside that interval, so range scaling
keeps every demonstrated action representable while still bounding
divergent samples.
"""

from __future__ import annotations

import numpy as np

__all__ = ["ActionNormalizer"]


class ActionNormalizer:
    """Affine map between physical actions and the policy training space."""

    def __init__(self, center: np.ndarray, scale: np.ndarray):
        self.center = np.asarray(center, dtype=np.float64)
        self.scale = np.maximum(np.asarray(scale, dtype=np.float64), 1e-4)

    @classmethod
    def from_data(cls, actions: np.ndarray) -> "ActionNormalizer":
        """Range-fit so the data spans [-1, 1]; actions: (..., A)."""
        flat = np.asarray(actions, dtype=np.float64).reshape(-1, actions.shape[-1])
        lo, hi = flat.min(axis=0), flat.max(axis=0)
        return cls((lo + hi) / 2.0, (hi - lo) / 2.0)

    def normalize(self, a: np.ndarray) -> np.ndarray:
        return (np.asarray(a, dtype=np.float64) - self.center) / self.scale

    def denormalize(self, n: np.ndarray) -> np.ndarray:
        return np.asarray(n, dtype=np.float64) * self.scale + self.center

    def to_json(self) -> dict:
        return {"center": self.center.tolist(), "scale": self.scale.tolist()}

    @classmethod
    def from_json(cls, d: dict) -> "ActionNormalizer":
        return cls(np.asarray(d["center"]), np.asarray(d["scale"]))
