#!/usr/bin/env python3
"""Final held-out accuracy of each selection strategy across sim seeds."""

from __future__ import annotations

import argparse
import csv
import statistics
from pathlib import Path

from sgac.experiment import ExperimentConfig, load_experiment, strategy_ablation
from sgac.selector import STRATEGY_SCORERS


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--seeds", type=int, default=20)
    ap.add_argument("--strategies", nargs="+", default=[*STRATEGY_SCORERS, "random"])
    ap.add_argument("--config", help="experiment config JSON")
    ap.add_argument("--out", default="results/strategy_ablation.csv")
    args = ap.parse_args()

    base = load_experiment(args.config) if args.config else ExperimentConfig()
    finals = strategy_ablation(args.strategies, range(args.seeds), base)
    Path(args.out).parent.mkdir(parents=True, exist_ok=True)
    with open(args.out, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["seed", *args.strategies])
        for seed in range(args.seeds):
            w.writerow([seed, *(finals[s][seed] for s in args.strategies)])
    for s in sorted(args.strategies, key=lambda s: -statistics.mean(finals[s])):
        v = finals[s]
        print(f"{s:>17}  mean {statistics.mean(v):.4f}  sd {statistics.stdev(v):.4f}")


if __name__ == "__main__":
    main()
