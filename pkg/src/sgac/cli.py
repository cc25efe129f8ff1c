"""``sgac`` command line: signals, fit, run, report, eval.

Exit codes: 0 ok, 2 input error, 3 backend error, 4 degenerate fit,
5 pool or config violation.
"""

from __future__ import annotations

import argparse
import dataclasses
import io
import json
import logging
import sys
from pathlib import Path

from .backend import BackendError, evaluate_policy, generate_rollouts
from .curriculum import ConfigError, PoolExhausted, StepFailed, run_curriculum
from .data import DatasetError, Problem, load_problems
from .experiment import ExperimentConfig, build_backend, load_experiment
from .report import report_run
from .seeding import derive_seed
from .selector import STRATEGIES, FitDegenerate, fit_selector, load_model, read_transfer_records
from .signals import collect_signals, write_signals_csv

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_BACKEND = 3
EXIT_FIT = 4
EXIT_POOL = 5

log = logging.getLogger("sgac")


class InputError(Exception):
    pass


def _read_problems(path: str) -> list[Problem]:
    try:
        if path == "-":
            problems = [Problem.from_json(json.loads(line)) for line in sys.stdin if line.strip()]
        else:
            problems = load_problems(path)
    except (OSError, DatasetError, json.JSONDecodeError) as exc:
        raise InputError(str(exc)) from exc
    if not problems:
        raise InputError(f"{path}: no problems")
    return problems


def cmd_signals(args) -> int:
    problems = _read_problems(args.problems)
    sim = load_experiment(args.config).sim if args.config else None
    backend = build_backend(args.backend, sim, args.seed)
    rows = []
    for i, problem in enumerate(problems):
        rollouts = generate_rollouts(
            backend, problem, args.k, args.temperature, args.max_new_tokens, derive_seed(args.seed, "signals", i)
        )
        rows.append((problem.id, collect_signals(problem, rollouts)))
    buf = io.StringIO()
    write_signals_csv(rows, buf)
    if args.out is None:
        sys.stdout.write(buf.getvalue())
        return EXIT_OK
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "signals.csv").write_text(buf.getvalue(), encoding="utf-8")
    payload = [{"candidate_id": cid, **s.to_json()} for cid, s in rows]
    (out / "signals.json").write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    print(f"wrote {len(rows)} signal rows to {out}")
    return EXIT_OK


def cmd_fit(args) -> int:
    try:
        records = read_transfer_records(args.records)
    except (OSError, KeyError, ValueError) as exc:
        raise InputError(str(exc)) from exc
    model = fit_selector(records)
    text = model.dumps()
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    print(
        f"w_p={model.w_p:.6g} w_sigma={model.w_sigma:.6g} w_d={model.w_d:.6g} "
        f"w_level={model.w_level:.6g} intercept={model.intercept:.6g} R2={model.fit_r2:.6f}",
        file=sys.stderr if not args.out else sys.stdout,
    )
    return EXIT_OK


def _resolve_experiment(args) -> ExperimentConfig:
    if args.config:
        try:
            exp = load_experiment(args.config)
        except OSError as exc:
            raise InputError(str(exc)) from exc
        except json.JSONDecodeError as exc:
            raise InputError(f"{args.config}: {exc}") from exc
    else:
        exp = ExperimentConfig()
    changes = {}
    if args.seed is not None:
        changes["master_seed"] = args.seed
    if args.k is not None:
        changes["rollouts_per_candidate"] = args.k
    if args.batch is not None:
        changes["batch_size"] = args.batch
    if args.steps is not None:
        changes["total_steps"] = args.steps
    if args.eval_every is not None:
        changes["eval_every"] = args.eval_every
    if args.selector is not None:
        changes["selector"] = load_model(args.selector)
        changes["strategy"] = "model"
    if args.strategy is not None:
        changes["strategy"] = args.strategy
    if changes:
        exp = exp.with_curriculum(**changes)
    if args.backend is not None:
        exp = dataclasses.replace(exp, backend=args.backend)
    return exp


def cmd_run(args) -> int:
    exp = _resolve_experiment(args)
    base = Path(args.config).parent if args.config else None
    try:
        dataset = exp.dataset.load(base)
    except (OSError, DatasetError) as exc:
        raise InputError(str(exc)) from exc
    backend = build_backend(exp.backend, exp.sim, exp.curriculum.master_seed)
    summary = run_curriculum(dataset, backend, exp.curriculum, args.out, exp.to_json())
    print(f"run complete: {summary.steps_completed} steps, final accuracy {summary.final_accuracy}")
    print(f"artifacts in {args.out}")
    return EXIT_OK


def cmd_report(args) -> int:
    run_dir = Path(args.run_dir)
    if not (run_dir / "events.jsonl").is_file():
        raise InputError(f"{run_dir}: no events.jsonl")
    paths = report_run(run_dir, args.out)
    for p in paths.values():
        print(p)
    return EXIT_OK


def cmd_eval(args) -> int:
    problems = _read_problems(args.problems)
    sim = load_experiment(args.config).sim if args.config else None
    backend = build_backend(args.backend, sim, args.seed)
    acc = evaluate_policy(backend, problems, args.max_new_tokens)
    print(json.dumps({"n": len(problems), "accuracy": acc}, sort_keys=True))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="sgac", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("signals", help="measure per-candidate signals from K rollouts")
    p.add_argument("problems", help="JSONL problems file, or - for stdin")
    p.add_argument("--backend", default="sim", help="sim, replay or remote:URL")
    p.add_argument("--config", help="experiment config (sim settings)")
    p.add_argument("--k", type=int, default=4)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--temperature", type=float, default=1.0)
    p.add_argument("--max-new-tokens", type=int, default=1024)
    p.add_argument("--out", help="output directory for signals.csv and signals.json (default: CSV to stdout)")
    p.set_defaults(func=cmd_signals)

    p = sub.add_parser("fit", help="fit the linear selector to transfer records")
    p.add_argument("records", help="CSV or JSONL with p_s, var_r, disagreement, level, a_down")
    p.add_argument("--out", help="model JSON path (default: stdout)")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("run", help="run the curriculum")
    p.add_argument("--config")
    p.add_argument("--backend", help="sim, replay or remote:URL (overrides config)")
    p.add_argument("--seed", type=int, help="master seed")
    p.add_argument("--out", default="run", help="run directory")
    p.add_argument("--k", type=int)
    p.add_argument("--batch", type=int)
    p.add_argument("--steps", type=int)
    p.add_argument("--eval-every", type=int)
    p.add_argument("--strategy", choices=STRATEGIES)
    p.add_argument("--selector", help="SelectorModel JSON; implies --strategy model")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("report", help="emit figure and table data from a run directory")
    p.add_argument("run_dir")
    p.add_argument("--out", help="output directory (default: the run directory)")
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("eval", help="greedy accuracy of a backend on a problems file")
    p.add_argument("problems")
    p.add_argument("--backend", default="sim")
    p.add_argument("--config")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--max-new-tokens", type=int, default=1024)
    p.set_defaults(func=cmd_eval)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except FitDegenerate as exc:
        print(f"error: degenerate fit: {exc}", file=sys.stderr)
        return EXIT_FIT
    except (PoolExhausted, ConfigError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_POOL
    except (BackendError, StepFailed) as exc:
        print(f"error: backend: {exc}", file=sys.stderr)
        return EXIT_BACKEND
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
