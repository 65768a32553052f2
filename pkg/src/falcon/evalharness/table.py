"""Aggregation of trial results into success tables and report files."""

from __future__ import annotations

import json
from collections import defaultdict
from pathlib import Path

from .trial import TrialResult

__all__ = ["SuccessTable", "write_outcomes"]


def write_outcomes(path, results, extra=None, mode: str = "a") -> None:
    """Write one JSON line per trial; mode "w" starts the file fresh."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, mode, encoding="utf-8") as fh:
        for r in results:
            row = r.to_json()
            if extra:
                row.update(extra)
            fh.write(json.dumps(row, sort_keys=True) + "\n")


class SuccessTable:
    """Stage-wise success rates grouped by (variant, task, region)."""

    def __init__(self):
        self._cells = defaultdict(list)   # (variant, task, region) -> [TrialResult]
        self._stage_order = {}            # task -> stage tuple

    def add(self, variant: str, result: TrialResult) -> None:
        key = (variant, result.task_id, result.region)
        self._cells[key].append(result)
        if result.task_id not in self._stage_order:
            self._stage_order[result.task_id] = tuple(result.stages.keys())

    def add_many(self, variant: str, results) -> None:
        for r in results:
            self.add(variant, r)

    def rows(self):
        """One dict per cell: rates for each stage plus overall."""
        out = []
        for (variant, task, region) in sorted(self._cells):
            trials = self._cells[(variant, task, region)]
            n = len(trials)
            row = {"variant": variant, "task": task, "region": region, "n": n}
            for stage in self._stage_order[task]:
                row[stage] = sum(1 for t in trials if t.stages.get(stage)) / n
            row["overall"] = sum(1 for t in trials if t.success) / n
            out.append(row)
        return out

    def overall_rate(self, variant: str, task: str, region: str | None = None) -> float:
        picks = [r for (v, t, g), rs in self._cells.items()
                 for r in rs if v == variant and t == task
                 and (region is None or g == region)]
        if not picks:
            raise KeyError(f"no trials for {variant}/{task}/{region}")
        return sum(1 for r in picks if r.success) / len(picks)

    def to_csv(self, path) -> None:
        rows = self.rows()
        if not rows:
            raise ValueError("empty table")
        cols = ["variant", "task", "region", "n"]
        stages = [c for r in rows for c in r if c not in cols + ["overall"]]
        cols += sorted(set(stages), key=stages.index) + ["overall"]
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(",".join(cols) + "\n")
            for r in rows:
                vals = []
                for c in cols:
                    v = r.get(c, "")
                    vals.append(f"{v:.3f}" if isinstance(v, float) else str(v))
                fh.write(",".join(vals) + "\n")

    def to_text(self) -> str:
        rows = self.rows()
        if not rows:
            return "(no trials)\n"
        lines = []
        for task in sorted({r["task"] for r in rows}):
            stages = list(self._stage_order[task])
            cols = ["variant", "region", "n"] + stages + ["overall"]
            sub = [r for r in rows if r["task"] == task]
            cells = [[str(r.get("variant")), str(r.get("region")), str(r["n"])]
                     + [f"{r[s]:.2f}" for s in stages]
                     + [f"{r['overall']:.2f}"] for r in sub]
            widths = [max(len(c), *(len(row[i]) for row in cells))
                      for i, c in enumerate(cols)]
            lines.append(f"== {task} ==")
            lines.append("  ".join(c.ljust(w) for c, w in zip(cols, widths)))
            for row in cells:
                lines.append("  ".join(v.ljust(w) for v, w in zip(row, widths)))
            lines.append("")
        return "\n".join(lines)
