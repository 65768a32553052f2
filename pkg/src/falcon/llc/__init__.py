from .types import LlcState, OBS_DIM, ACT_DIM, CMD_DIM
from .rewards import (
    desired_gravity, gravity_in_body, orientation_penalty, reward_components,
    total_reward, quat_from_euler_zyx, quat_rotate_inverse,
)
from .dynamics import DynState, DynParams, sample_params, dynamics_step
from .env import LlcVecEnv, build_obs
from .analytic import AnalyticController
from .ppo import (
    ActorCritic, ppo_surrogate_loss, compute_gae, train_ppo,
    evaluate_controller, save_llc_checkpoint, load_llc_checkpoint,
)
from .tracker import LlcTracker, build_tracker

__all__ = [
    "LlcState", "OBS_DIM", "ACT_DIM", "CMD_DIM",
    "desired_gravity", "gravity_in_body", "orientation_penalty",
    "reward_components", "total_reward", "quat_from_euler_zyx", "quat_rotate_inverse",
    "DynState", "DynParams", "sample_params", "dynamics_step",
    "LlcVecEnv", "build_obs", "AnalyticController",
    "ActorCritic", "ppo_surrogate_loss", "compute_gae", "train_ppo",
    "evaluate_controller", "save_llc_checkpoint", "load_llc_checkpoint",
    "LlcTracker", "build_tracker",
]
