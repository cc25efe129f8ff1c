"""Data files behind the selector-decision figures and tables of a run."""

from __future__ import annotations

import csv
import json
from pathlib import Path
from typing import Sequence

from .curriculum import StepRecord, load_events, summarize_run

REPORT_FILES = (
    "fig1_signals.csv",
    "fig2_levels.csv",
    "fig3_space.csv",
    "table8_distributions.json",
    "losspatterns.json",
)


def _write_csv(path: Path, header: Sequence[str], rows) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def _write_json(path: Path, obj) -> None:
    path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def write_report(records: Sequence[StepRecord], out_dir: str | Path, eval_history=None) -> dict[str, Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    chosen = [(r.step, r.selected_signals) for r in records]
    paths = {name: out / name for name in REPORT_FILES}
    _write_csv(
        paths["fig1_signals.csv"],
        ["step", "p_s", "var_r", "disagreement"],
        [[t, repr(s.p_s), repr(s.var_r), repr(s.disagreement)] for t, s in chosen],
    )
    _write_csv(paths["fig2_levels.csv"], ["step", "level"], [[t, s.level] for t, s in chosen])
    _write_csv(
        paths["fig3_space.csv"],
        ["step", "p_s", "disagreement", "var_r", "level"],
        [[t, repr(s.p_s), repr(s.disagreement), repr(s.var_r), s.level] for t, s in chosen],
    )
    summary = summarize_run(records, eval_history)
    _write_json(
        paths["table8_distributions.json"],
        {
            "level_groups": summary.level_groups,
            "level_distribution": summary.level_distribution,
            "p_s_bands": summary.p_s_bands,
            "disagreement_bands": summary.disagreement_bands,
        },
    )
    _write_json(paths["losspatterns.json"], summary.loss_patterns)
    return paths


def report_run(run_dir: str | Path, out_dir: str | Path | None = None) -> dict[str, Path]:
    """Read ``events.jsonl`` from ``run_dir`` and emit the report files."""
    records, history = load_events(run_dir)
    return write_report(records, out_dir if out_dir is not None else run_dir, history)
