#!/usr/bin/env python3
"""Signal discovery on the simulated learner.

For N candidates: measure signals from K rollouts, run one independent
training burst from a fresh policy, and record held-out accuracy. One burst
rarely flips a greedy answer, so the default target is the learner's expected
accuracy (mean success probability over the test set); ``--target greedy``
uses greedy accuracy instead. Writes the transfer records, a fitted selector
and its leave-one-out table.
"""

from __future__ import annotations

import argparse
import csv
import json
from pathlib import Path

from sgac.backend import evaluate_policy, generate_rollouts
from sgac.curriculum import CurriculumConfig, init_pool
from sgac.data import synthetic_dataset
from sgac.grpo import BurstConfig, micro_burst
from sgac.seeding import derive_seed
from sgac.selector import TransferRecord, fit_selector, leave_one_out_contribution
from sgac.signals import collect_signals
from sgac.sim import SimBackend, SimConfig, sim_success_prob, to_sim_problem


def expected_accuracy(backend: SimBackend, testset) -> float:
    return sum(sim_success_prob(backend.state, to_sim_problem(p)) for p in testset) / len(testset)


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--candidates", type=int, default=40)
    ap.add_argument("--k", type=int, default=8)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--testset", type=int, default=50)
    ap.add_argument("--target", choices=("expected", "greedy"), default="expected")
    ap.add_argument("--out", default="results/phase1")
    args = ap.parse_args()

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    sim = SimConfig()
    pool, testset = init_pool(synthetic_dataset(1050, args.seed), CurriculumConfig(testset_size=args.testset))
    score = expected_accuracy if args.target == "expected" else evaluate_policy
    base = score(SimBackend.from_config(sim, args.seed), testset)
    print(f"base accuracy {base:.3f}")

    records = []
    with open(out / "transfer_records.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["candidate_id", "p_s", "var_r", "disagreement", "level", "a_down"])
        for i, problem in enumerate(pool[: args.candidates]):
            probe = SimBackend.from_config(sim, args.seed)
            signals = collect_signals(problem, generate_rollouts(probe, problem, args.k, 1.0, 1024, derive_seed(args.seed, "phase1", i)))
            # every candidate trains from its own fresh copy of the base policy
            learner = SimBackend.from_config(sim, args.seed)
            micro_burst(learner, problem, BurstConfig(), seed=derive_seed(args.seed, "phase1-burst", i))
            a_down = score(learner, testset)
            records.append(TransferRecord(signals, a_down))
            w.writerow([problem.id, signals.p_s, signals.var_r, signals.disagreement, signals.level, a_down])

    model = fit_selector(records)
    (out / "selector.json").write_text(model.dumps())
    print(json.dumps(model.to_json(), indent=2))
    with open(out / "leave_one_out.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["configuration", "r2", "rank_corr"])
        for r in leave_one_out_contribution(records):
            w.writerow([r.configuration, r.r2, r.rank_corr])
            print(f"{r.configuration:>14}  R2={r.r2}  rank={r.rank_corr}")


if __name__ == "__main__":
    main()
