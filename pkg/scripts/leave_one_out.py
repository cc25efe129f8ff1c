#!/usr/bin/env python3
"""Drop-one-feature refits of the selector on a transfer-records file."""

from __future__ import annotations

import argparse

from sgac.selector import leave_one_out_contribution, read_transfer_records


def fmt(x):
    return "n/a" if x is None else f"{x:.4f}"


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("records", help="CSV or JSONL with p_s, var_r, disagreement, level, a_down")
    args = ap.parse_args()
    print(f"{'configuration':>14}  {'R2':>8}  {'rank':>8}")
    for r in leave_one_out_contribution(read_transfer_records(args.records)):
        print(f"{r.configuration:>14}  {fmt(r.r2):>8}  {fmt(r.rank_corr):>8}")


if __name__ == "__main__":
    main()
