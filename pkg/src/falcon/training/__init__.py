"""Training: alignment pretraining, frame caching, joint policy training."""

from .align import caption_bank, pretrain_alignment
from .bundle import TrainedBundle, load_bundle, save_bundle
from .cache import FrameCache, build_frame_cache
from .joint import VARIANTS, JointTrainer
from .pipeline import bundle_path, train_all, train_variant

__all__ = [
    "caption_bank", "pretrain_alignment", "TrainedBundle", "load_bundle",
    "save_bundle", "FrameCache", "build_frame_cache", "VARIANTS",
    "JointTrainer", "bundle_path", "train_all", "train_variant",
]
