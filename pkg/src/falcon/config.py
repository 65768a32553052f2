"""Configuration tree for the loco-manipulation stack.

A run is fully described by a ``RunConfig``: world geometry, encoder sizes,
diffusion policy shape, loss weights, low-level controller training, data
collection, evaluation protocol and the teleop service. Configs load from
YAML files that may ``extends`` a parent file; unknown keys are rejected so
typos fail loudly. ``config_hash`` fingerprints the effective config and is
embedded in every artifact (episodes, checkpoints, result files) so that
mismatched artifacts can be detected when cross-loaded.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
import os
import typing
from dataclasses import dataclass, field
from pathlib import Path

import yaml

__all__ = [
    "ConfigError",
    "SceneConfig",
    "ArmConfig",
    "BaseLimits",
    "NoiseConfig",
    "WorldConfig",
    "EncoderConfig",
    "PolicyConfig",
    "LossConfig",
    "RewardWeights",
    "DomainRandomization",
    "PpoConfig",
    "LlcConfig",
    "ExpertConfig",
    "TrainConfig",
    "EvalConfig",
    "TeleopConfig",
    "RunConfig",
    "load_config",
    "default_config",
    "config_hash",
    "config_to_dict",
    "CONFIG_ENV_VAR",
]

CONFIG_ENV_VAR = "FALCON_CONFIG"


class ConfigError(ValueError):
    """Raised for unknown keys, bad types or malformed config files."""


@dataclass
class SceneConfig:
    """Room layout, cabinet/drawer geometry and task regions (meters)."""

    room_w: float = 5.0
    room_h: float = 4.0
    # cabinet is an axis-aligned box against the far (+y) wall
    cabinet_cx: float = 2.5
    cabinet_cy: float = 3.55
    cabinet_hx: float = 0.45
    cabinet_hy: float = 0.35
    # top drawer slides toward -y out of the cabinet front face
    drawer_w: float = 0.6
    drawer_travel: float = 0.35
    handle_depth: float = 0.02
    # interaction radii
    capture_radius: float = 0.07
    drop_min_fraction: float = 0.3
    toy_radius: float = 0.035
    base_radius: float = 0.20
    # manipulation pose box (base must stand here facing the cabinet)
    manip_cx: float = 2.5
    manip_cy: float = 2.62
    manip_hx: float = 0.22
    manip_hy: float = 0.14
    manip_yaw_tol: float = 0.35
    # start regions: [x_lo, x_hi, y_lo, y_hi]; left/right are held out
    region_center: tuple = (1.9, 3.1, 0.5, 1.5)
    region_left: tuple = (0.35, 1.55, 0.5, 1.5)
    region_right: tuple = (3.45, 4.65, 0.5, 1.5)
    toy_lateral_range: float = 0.15

    def region(self, name: str) -> tuple:
        try:
            return getattr(self, f"region_{name}")
        except AttributeError:
            raise ConfigError(f"unknown start region {name!r}") from None


@dataclass
class ArmConfig:
    """Planar two-link arm mounted at the front of the base."""

    l1: float = 0.28
    l2: float = 0.22
    mount_x: float = 0.12
    # torso pitch/height shift the effective mount point forward
    k_pitch: float = 0.25
    k_height: float = 0.20
    joint_rate: float = 3.0
    gripper_threshold: float = 0.5


@dataclass
class BaseLimits:
    """Command clamps for the quadruped base."""

    v_max: float = 0.6
    wz_max: float = 1.2
    pitch_min: float = -0.1
    pitch_max: float = 0.45
    height_min: float = 0.22
    height_max: float = 0.38
    height_nominal: float = 0.30
    pitch_rate: float = 1.0
    height_rate: float = 0.25


@dataclass
class NoiseConfig:
    """Actuation noise injected by the tracking layer (std, per unit)."""

    v_std: float = 0.0
    wz_std: float = 0.0
    pose_std: float = 0.0


@dataclass
class WorldConfig:
    dt: float = 0.02                 # 50 Hz world step
    hl_every: int = 5                # high-level ticks every 5 steps (10 Hz)
    base_substeps: int = 4           # 200 Hz base integration
    arm_substeps: int = 2            # 100 Hz arm integration
    raster: int = 96
    scene: SceneConfig = field(default_factory=SceneConfig)
    arm: ArmConfig = field(default_factory=ArmConfig)
    limits: BaseLimits = field(default_factory=BaseLimits)
    noise: NoiseConfig = field(default_factory=NoiseConfig)
    llc_backend: str = "ideal"       # ideal | analytic | ppo:<checkpoint path>


@dataclass
class EncoderConfig:
    d_f: int = 64                    # per-view image / text embedding width
    d_model: int = 128               # fused latent width (512 also supported)
    n_heads: int = 4
    fusion_layers: int = 2
    proprio_dim: int = 14
    n_stages: int = 4                # stages per task (phase head width K)
    alpha: float = 10.0              # sharpness of the phase completion gate
    tau_align: float = 0.1
    text_hidden: int = 128


@dataclass
class PolicyConfig:
    horizon: int = 8                 # predicted action chunk length
    h_exec: int = 4                  # steps executed before re-planning
    t_obs: int = 2                   # observation window length
    t_diff: int = 16                 # denoising steps
    hidden: int = 256
    blocks: int = 3
    time_embed: int = 64


@dataclass
class LossConfig:
    tau: float = 0.1                 # contrastive temperature
    delta: float = 0.1               # coordination loss weight
    d_c: int = 64                    # projection space width
    proj_hidden: int = 128


@dataclass
class RewardWeights:
    w_v: float = 1.0
    w_h: float = 0.5
    w_ori: float = 4.0
    w_u: float = 0.01
    sigma_v: float = 0.25
    sigma_h: float = 0.05


@dataclass
class DomainRandomization:
    mass_scale: tuple = (0.7, 1.4)
    drag: tuple = (0.15, 0.6)
    push_std: tuple = (0.0, 0.12)


@dataclass
class PpoConfig:
    n_envs: int = 32
    rollout: int = 64
    iters: int = 120
    epochs: int = 4
    minibatch: int = 512
    lr: float = 3e-4
    gamma: float = 0.99
    lam: float = 0.95
    clip: float = 0.2
    vf_coef: float = 0.5
    ent_coef: float = 0.0
    max_grad_norm: float = 0.5
    hidden: int = 64
    episode_len: int = 200
    resample_cmd_every: int = 50
    warm_start: bool = True          # regress onto the model-based controller first


@dataclass
class LlcConfig:
    dt: float = 0.02                 # 50 Hz controller rate
    tau_v: float = 0.25              # velocity response time constant
    tau_w: float = 0.15
    tau_h: float = 0.35
    tau_p: float = 0.25
    act_scale: tuple = (1.2, 1.2, 2.5, 1.8, 0.5)
    rewards: RewardWeights = field(default_factory=RewardWeights)
    dr: DomainRandomization = field(default_factory=DomainRandomization)
    ppo: PpoConfig = field(default_factory=PpoConfig)


@dataclass
class ExpertConfig:
    """Scripted demonstration policy noise/shape knobs."""

    v_noise: float = 0.03
    arm_noise: float = 0.008
    kp_nav: float = 1.6
    kp_yaw: float = 2.4
    kp_arm: float = 0.5
    settle_ticks: int = 3


@dataclass
class TrainConfig:
    batch: int = 32
    steps: int = 4000
    lr: float = 3e-4
    pretrain_steps: int = 1200
    pretrain_batch: int = 64
    pretrain_lr: float = 1e-3
    weight_decay: float = 1e-6
    log_every: int = 50
    variant: str = "falcon"          # falcon | no_cl | no_phase_cl


@dataclass
class EvalConfig:
    trials_per_region: int = 5
    step_limit: int = 600            # high-level ticks (60 s at 10 Hz)
    regions: tuple = ("center", "left", "right")


@dataclass
class TeleopConfig:
    host: str = "127.0.0.1"
    port: int = 8765
    protocol_version: int = 1
    frame_hz: float = 20.0
    tick_hz: float = 10.0
    watchdog_s: float = 5.0


@dataclass
class RunConfig:
    world: WorldConfig = field(default_factory=WorldConfig)
    encoder: EncoderConfig = field(default_factory=EncoderConfig)
    policy: PolicyConfig = field(default_factory=PolicyConfig)
    loss: LossConfig = field(default_factory=LossConfig)
    llc: LlcConfig = field(default_factory=LlcConfig)
    expert: ExpertConfig = field(default_factory=ExpertConfig)
    train: TrainConfig = field(default_factory=TrainConfig)
    eval: EvalConfig = field(default_factory=EvalConfig)
    teleop: TeleopConfig = field(default_factory=TeleopConfig)


def _coerce(value, hint, path):
    """Coerce a YAML scalar/list to the annotated field type."""
    if hint is float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"{path}: expected number, got {value!r}")
        return float(value)
    if hint is int:
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"{path}: expected int, got {value!r}")
        return value
    if hint is str:
        if not isinstance(value, str):
            raise ConfigError(f"{path}: expected string, got {value!r}")
        return value
    if hint is bool:
        if not isinstance(value, bool):
            raise ConfigError(f"{path}: expected bool, got {value!r}")
        return value
    if hint is tuple:
        if not isinstance(value, (list, tuple)):
            raise ConfigError(f"{path}: expected list, got {value!r}")
        return tuple(value)
    return value


def _build(cls, data: dict, path: str):
    if not isinstance(data, dict):
        raise ConfigError(f"{path or 'config'}: expected mapping, got {data!r}")
    fields = {f.name: f for f in dataclasses.fields(cls)}
    unknown = sorted(set(data) - set(fields))
    if unknown:
        raise ConfigError(f"{path or 'config'}: unknown key(s) {unknown}")
    kwargs = {}
    hints = typing.get_type_hints(cls)
    for name, value in data.items():
        sub = f"{path}.{name}" if path else name
        hint = hints.get(name, None)
        if dataclasses.is_dataclass(hint):
            kwargs[name] = _build(hint, value, sub)
        else:
            kwargs[name] = _coerce(value, hint, sub)
    return cls(**kwargs)


def _deep_merge(base: dict, override: dict) -> dict:
    out = dict(base)
    for key, value in override.items():
        if isinstance(value, dict) and isinstance(out.get(key), dict):
            out[key] = _deep_merge(out[key], value)
        else:
            out[key] = value
    return out


def _load_yaml_tree(path: Path, seen: tuple = ()) -> dict:
    path = path.resolve()
    if path in seen:
        raise ConfigError(f"config extends cycle through {path}")
    try:
        raw = yaml.safe_load(path.read_text()) or {}
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    except yaml.YAMLError as exc:
        raise ConfigError(f"malformed YAML in {path}: {exc}") from None
    if not isinstance(raw, dict):
        raise ConfigError(f"{path}: top level must be a mapping")
    parent = raw.pop("extends", None)
    if parent is None:
        return raw
    parent_path = Path(parent)
    if not parent_path.is_absolute():
        parent_path = path.parent / parent_path
    base = _load_yaml_tree(parent_path, seen + (path,))
    return _deep_merge(base, raw)


def load_config(path: str | Path | None = None) -> RunConfig:
    """Load a RunConfig from YAML.

    When ``path`` is None, falls back to the ``FALCON_CONFIG`` environment
    variable, then to built-in defaults.
    """
    if path is None:
        path = os.environ.get(CONFIG_ENV_VAR) or None
    if path is None:
        return RunConfig()
    data = _load_yaml_tree(Path(path))
    return _build(RunConfig, data, "")


def default_config() -> RunConfig:
    return RunConfig()


def config_to_dict(cfg: RunConfig) -> dict:
    return dataclasses.asdict(cfg)


def config_hash(cfg: RunConfig) -> str:
    """Stable 16-hex-digit fingerprint of the effective config."""
    blob = json.dumps(config_to_dict(cfg), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()[:16]
