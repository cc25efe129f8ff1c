#!/usr/bin/env python3
"""Held-out accuracy against curriculum length, averaged over sim seeds."""

from __future__ import annotations

import argparse
import csv
import statistics
from dataclasses import replace
from pathlib import Path

from sgac.curriculum import run_curriculum
from sgac.experiment import ExperimentConfig
from sgac.sim import SimBackend


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--seeds", type=int, default=20)
    ap.add_argument("--steps", type=int, default=40)
    ap.add_argument("--eval-every", type=int, default=5)
    ap.add_argument("--strategy", default="deployment")
    ap.add_argument("--out", default="results/curriculum_length.csv")
    args = ap.parse_args()

    exp = ExperimentConfig()
    dataset = exp.dataset.load()
    by_step: dict[int, list[float]] = {}
    for seed in range(args.seeds):
        config = replace(exp.curriculum, total_steps=args.steps, eval_every=args.eval_every, strategy=args.strategy, master_seed=seed)
        summary = run_curriculum(dataset, SimBackend.from_config(exp.sim, seed), config)
        for step, acc in summary.trajectory:
            by_step.setdefault(step, []).append(acc)
    Path(args.out).parent.mkdir(parents=True, exist_ok=True)
    with open(args.out, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["step", "mean_accuracy", "sd"])
        for step in sorted(by_step):
            v = by_step[step]
            w.writerow([step, statistics.mean(v), statistics.pstdev(v)])
            print(f"step {step:>3}  {statistics.mean(v):.4f}")


if __name__ == "__main__":
    main()
