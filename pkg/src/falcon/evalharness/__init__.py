"""Stage-wise evaluation: trial rollouts, scoring, and report tables."""

from .matrix import eval_bundle, eval_expert, run_matrix, trial_seed
from .table import SuccessTable, write_outcomes
from .trial import (ExpertSource, MixedSource, PolicySource, TrialResult,
                    run_trial, subsystem_success)

__all__ = [
    "ExpertSource", "MixedSource", "PolicySource", "TrialResult",
    "SuccessTable", "run_trial", "subsystem_success", "write_outcomes",
    "eval_bundle", "eval_expert", "run_matrix", "trial_seed",
]
