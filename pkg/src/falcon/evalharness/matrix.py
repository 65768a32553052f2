"""Evaluation plans: seeded trial grids and the ablation matrix.

A plan enumerates (task, region, trial) cells with deterministic seeds so
repeated runs reproduce identical outcome files. The ablation matrix runs
the same plan for each trained variant and stacks everything into one
stage-wise success table.
"""

from __future__ import annotations

from pathlib import Path

from ..config import RunConfig
from .table import SuccessTable, write_outcomes
from .trial import ExpertSource, MixedSource, PolicySource, run_trial

__all__ = ["eval_bundle", "eval_expert", "run_matrix", "trial_seed"]


def trial_seed(seed0: int, region_idx: int, trial_idx: int) -> int:
    """Deterministic, collision-free seed for one trial cell."""
    return seed0 + 1000 * region_idx + trial_idx


def _make_source(bundle, cfg: RunConfig, task_id: str, mode: str, seed: int):
    """Build the command source for one trial under the given mode."""
    if mode == "auto":
        return PolicySource(bundle.make_runner(task_id, seed=seed))
    expert = ExpertSource(cfg, task_id, seed=seed)
    policy = PolicySource(bundle.make_runner(task_id, seed=seed))
    if mode == "tele_base":
        return MixedSource(arm_source=policy, base_source=expert)
    if mode == "tele_arm":
        return MixedSource(arm_source=expert, base_source=policy)
    raise ValueError(f"unknown mode {mode!r}")


def eval_bundle(cfg: RunConfig, bundle, tasks, regions=None, trials=None,
                seed0: int = 0, mode: str = "auto", variant: str | None = None,
                table: SuccessTable | None = None, progress=None) -> tuple:
    """Run the seeded trial grid for one bundle.

    Returns (SuccessTable, [TrialResult]) covering tasks x regions x trials.
    """
    regions = cfg.eval.regions if regions is None else regions
    trials = cfg.eval.trials_per_region if trials is None else trials
    variant = bundle.variant if variant is None else variant
    table = SuccessTable() if table is None else table
    results = []
    for task in tasks:
        for r_i, region in enumerate(regions):
            for t_i in range(trials):
                seed = trial_seed(seed0, r_i, t_i)
                source = _make_source(bundle, cfg, task, mode, seed)
                res = run_trial(cfg, task, region, seed, source, mode=mode)
                table.add(variant, res)
                results.append(res)
                if progress is not None:
                    progress(variant, res)
    return table, results


def eval_expert(cfg: RunConfig, tasks, regions=None, trials=None,
                seed0: int = 0, table: SuccessTable | None = None,
                progress=None) -> tuple:
    """Same trial grid driven by the scripted expert (ceiling check)."""
    regions = cfg.eval.regions if regions is None else regions
    trials = cfg.eval.trials_per_region if trials is None else trials
    table = SuccessTable() if table is None else table
    results = []
    for task in tasks:
        for r_i, region in enumerate(regions):
            for t_i in range(trials):
                seed = trial_seed(seed0, r_i, t_i)
                res = run_trial(cfg, task, region, seed,
                                ExpertSource(cfg, task, seed=seed),
                                mode="expert")
                table.add("expert", res)
                results.append(res)
                if progress is not None:
                    progress("expert", res)
    return table, results


def run_matrix(cfg: RunConfig, bundles: dict, out_dir,
               tasks: tuple = ("task1", "task2"), regions=None,
               trials=None, seed0: int = 0, progress=None) -> SuccessTable:
    """Evaluate every variant over the full grid and write report files.

    ``bundles`` maps variant name -> loaded bundle. Writes outcomes.jsonl,
    table.csv and table.txt under ``out_dir`` and returns the table.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    table = SuccessTable()
    all_results = []
    for variant in sorted(bundles):
        _, results = eval_bundle(cfg, bundles[variant], tasks, regions,
                                 trials, seed0, variant=variant, table=table,
                                 progress=progress)
        for r in results:
            all_results.append((variant, r))
    out = out_dir / "outcomes.jsonl"
    out.unlink(missing_ok=True)
    for variant, r in all_results:
        write_outcomes(out, [r], extra={"variant": variant})
    table.to_csv(out_dir / "table.csv")
    (out_dir / "table.txt").write_text(table.to_text(), encoding="utf-8")
    return table
