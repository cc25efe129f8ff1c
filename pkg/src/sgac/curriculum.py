"""The autonomous curriculum: sieve, score, select, burst, evaluate.

Each step draws ``batch_size`` problems from the pool without replacement,
measures K rollouts per candidate, picks one with the configured strategy
and trains on it for one burst. Evaluation runs at step 0 and every
``eval_every`` steps. Every step is streamed to ``events.jsonl`` before the
next one starts, so a crashed run keeps its completed prefix.
"""

from __future__ import annotations

import csv
import hashlib
import json
import logging
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Callable, Optional, Sequence

from .backend import BackendError, PolicyBackend, evaluate_policy, generate_rollouts
from .data import Problem
from .grpo import BurstConfig, BurstReport, BurstStep, LossPattern, micro_burst
from .seeding import SplitMix64, derive_seed
from .selector import STRATEGIES, SelectorModel, choose
from .signals import RolloutRecord, SignalVector, collect_signals

log = logging.getLogger(__name__)


class ConfigError(ValueError):
    pass


class PoolExhausted(RuntimeError):
    pass


class StepFailed(RuntimeError):
    def __init__(self, message: str, step: int):
        super().__init__(message)
        self.step = step


@dataclass(frozen=True)
class CurriculumConfig:
    pool_size: int = 1000
    shuffle_seed: int = 42
    batch_size: int = 4
    rollouts_per_candidate: int = 4
    total_steps: int = 20
    eval_every: int = 5
    testset_size: int = 50
    burst: BurstConfig = field(default_factory=BurstConfig)
    strategy: str = "deployment"
    selector: Optional[SelectorModel] = None
    master_seed: int = 0
    signal_temperature: float = 1.0
    max_new_tokens: int = 1024
    max_workers: int = 1

    def __post_init__(self):
        if self.pool_size < 1:
            raise ConfigError("pool_size must be >= 1")
        if self.testset_size < 1:
            raise ConfigError("testset_size must be >= 1")
        if self.batch_size < 1 or self.rollouts_per_candidate < 1:
            raise ConfigError("batch_size and rollouts_per_candidate must be >= 1")
        if self.eval_every < 1:
            raise ConfigError("eval_every must be >= 1")
        if self.total_steps < 0:
            raise ConfigError("total_steps must be >= 0")
        if self.strategy not in STRATEGIES:
            raise ConfigError(f"unknown strategy {self.strategy!r}")
        if self.strategy == "model" and self.selector is None:
            raise ConfigError("strategy 'model' needs a selector")

    def to_json(self) -> dict:
        d = asdict(self)
        d["burst"] = self.burst.to_json()
        d["selector"] = self.selector.to_json() if self.selector is not None else None
        return d

    @classmethod
    def from_json(cls, d: dict) -> "CurriculumConfig":
        d = dict(d)
        if isinstance(d.get("burst"), dict):
            d["burst"] = BurstConfig(**d["burst"])
        if isinstance(d.get("selector"), dict):
            d["selector"] = SelectorModel.from_json(d["selector"])
        unknown = set(d) - set(cls.__dataclass_fields__)
        if unknown:
            raise ConfigError(f"unknown curriculum keys: {sorted(unknown)}")
        return cls(**d)


@dataclass
class CandidateRecord:
    problem_id: str
    level: int
    signals: SignalVector
    score: float
    rollouts: list[dict] = field(default_factory=list)

    def to_json(self) -> dict:
        return {
            "problem_id": self.problem_id,
            "level": self.level,
            "signals": self.signals.to_json(),
            "score": self.score,
            "rollouts": self.rollouts,
        }

    @classmethod
    def from_json(cls, d: dict) -> "CandidateRecord":
        return cls(d["problem_id"], int(d["level"]), SignalVector.from_json(d["signals"]), float(d["score"]), list(d.get("rollouts", [])))


@dataclass
class StepRecord:
    step: int
    batch: list[CandidateRecord]
    selected: str
    selected_index: int
    burst: BurstReport
    eval_accuracy: Optional[float] = None

    @property
    def selected_signals(self) -> SignalVector:
        return self.batch[self.selected_index].signals

    def to_json(self) -> dict:
        return {
            "step": self.step,
            "batch": [c.to_json() for c in self.batch],
            "selected": self.selected,
            "selected_index": self.selected_index,
            "burst": self.burst.to_json(),
            "eval_accuracy": self.eval_accuracy,
        }

    @classmethod
    def from_json(cls, d: dict) -> "StepRecord":
        return cls(
            step=int(d["step"]),
            batch=[CandidateRecord.from_json(c) for c in d["batch"]],
            selected=d["selected"],
            selected_index=int(d["selected_index"]),
            burst=BurstReport.from_json(d["burst"]),
            eval_accuracy=d.get("eval_accuracy"),
        )


# --------------------------------------------------------------- pool/sieve

def init_pool(dataset: Sequence[Problem], config: CurriculumConfig) -> tuple[list[Problem], list[Problem]]:
    """Shuffle with SplitMix64 Fisher-Yates; pool first, then the test slice."""
    need = config.pool_size + config.testset_size
    if len(dataset) < need:
        raise ConfigError(f"dataset has {len(dataset)} problems, need {need}")
    ids = [p.id for p in dataset]
    if len(set(ids)) != len(ids):
        raise ConfigError("dataset problem ids must be unique")
    order = list(range(len(dataset)))
    SplitMix64(config.shuffle_seed).shuffle(order)
    shuffled = [dataset[i].with_pool_index(pos) for pos, i in enumerate(order)]
    return shuffled[: config.pool_size], shuffled[config.pool_size : need]


def sieve_batch(pool: list[Problem], batch_size: int, seed: int) -> list[Problem]:
    """Uniform draw without replacement; drawn problems leave ``pool`` for good."""
    if batch_size < 1:
        raise ConfigError("batch_size must be >= 1")
    if len(pool) < batch_size:
        raise PoolExhausted(f"pool has {len(pool)} problems left, batch needs {batch_size}")
    rng = SplitMix64(seed)
    return [pool.pop(rng.below(len(pool))) for _ in range(batch_size)]


# -------------------------------------------------------------- run state

@dataclass
class RunState:
    pool: list[Problem]
    testset: list[Problem]
    step: int = 0
    records: list[StepRecord] = field(default_factory=list)
    eval_history: list[tuple[int, float]] = field(default_factory=list)
    consumed: list[str] = field(default_factory=list)


EventSink = Callable[[dict], None]


def _measure(backend, problem: Problem, config: CurriculumConfig, seed: int) -> tuple[SignalVector, list[RolloutRecord]]:
    rollouts = generate_rollouts(
        backend, problem, config.rollouts_per_candidate, config.signal_temperature, config.max_new_tokens, seed
    )
    return collect_signals(problem, rollouts), rollouts


def curriculum_step(state: RunState, backend: PolicyBackend, config: CurriculumConfig, emit: EventSink | None = None) -> StepRecord:
    emit = emit or (lambda event: None)
    t = state.step + 1
    master = config.master_seed
    batch = sieve_batch(state.pool, config.batch_size, derive_seed(master, "sieve", t))
    # the batch is consumed whether or not the step succeeds
    state.consumed.extend(p.id for p in batch)
    state.step = t
    try:
        seeds = [derive_seed(master, "signals", t, i) for i in range(len(batch))]
        if config.max_workers > 1:
            with ThreadPoolExecutor(max_workers=config.max_workers) as pool:
                measured = list(pool.map(lambda ps: _measure(backend, ps[0], config, ps[1]), zip(batch, seeds)))
        else:
            measured = [_measure(backend, p, config, s) for p, s in zip(batch, seeds)]
        signals = [m[0] for m in measured]
        index, scores = choose(signals, config.strategy, config.selector, seed=derive_seed(master, "choose", t))
        chosen = batch[index]

        def on_burst_step(bs: BurstStep, report: BurstReport) -> None:
            emit({
                "event": "burst_step",
                "step": t,
                "burst_step": bs.step,
                "losses_so_far": list(report.step_losses),
                "rewards": bs.rewards,
                "advantages": bs.advantages,
            })

        burst = micro_burst(backend, chosen, config.burst, seed=derive_seed(master, "burst", t), on_step=on_burst_step)
        accuracy = None
        if t % config.eval_every == 0:
            accuracy = evaluate_policy(backend, state.testset, config.max_new_tokens)
            state.eval_history.append((t, accuracy))
    except BackendError as exc:
        emit({"event": "step_failed", "step": t, "batch": [p.id for p in batch], "error": str(exc)})
        raise StepFailed(f"step {t} failed: {exc}", t) from exc

    record = StepRecord(
        step=t,
        batch=[
            CandidateRecord(p.id, p.level, sig, score, [r.to_json() for r in rollouts])
            for p, (sig, rollouts), score in zip(batch, measured, scores)
        ],
        selected=chosen.id,
        selected_index=index,
        burst=burst,
        eval_accuracy=accuracy,
    )
    state.records.append(record)
    emit({"event": "step", **record.to_json()})
    return record


# ---------------------------------------------------------------- summary

P_S_BANDS = ("0", "(0,0.5]", "(0.5,1]")
D_BANDS = (">=0.75", "[0.5,0.75)", "<0.5")
LEVEL_GROUPS = ("5", "4", "<=3")


def p_s_band(p: float) -> str:
    if p == 0:
        return P_S_BANDS[0]
    return P_S_BANDS[1] if p <= 0.5 else P_S_BANDS[2]


def d_band(d: float) -> str:
    if d >= 0.75:
        return D_BANDS[0]
    return D_BANDS[1] if d >= 0.5 else D_BANDS[2]


def level_group(level: int) -> str:
    return str(level) if level >= 4 else LEVEL_GROUPS[2]


@dataclass
class RunSummary:
    steps_completed: int
    problems_consumed: int
    selected: list[str]
    level_distribution: dict[str, float]
    level_groups: dict[str, float]
    p_s_bands: dict[str, float]
    disagreement_bands: dict[str, float]
    loss_patterns: dict[str, float]
    trajectory: Optional[list[tuple[int, float]]] = None
    final_accuracy: Optional[float] = None
    baseline_accuracy: Optional[float] = None

    def to_json(self) -> dict:
        d = asdict(self)
        if self.trajectory is None:
            d.pop("trajectory")
        else:
            d["trajectory"] = [[s, a] for s, a in self.trajectory]
        return d

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=2, sort_keys=True) + "\n"


def _fractions(labels: Sequence[str], keys: Sequence[str]) -> dict[str, float]:
    n = len(labels)
    return {k: (sum(1 for x in labels if x == k) / n if n else 0.0) for k in keys}


def summarize_run(records: Sequence[StepRecord], eval_history: Sequence[tuple[int, float]] | None = None) -> RunSummary:
    """Selector-decision distributions, loss-pattern frequencies and trajectory."""
    chosen = [r.selected_signals for r in records]
    patterns = [r.burst.pattern.value.lower() if r.burst.pattern else "" for r in records]
    merged = {r.step: r.eval_accuracy for r in records if r.eval_accuracy is not None}
    merged.update(eval_history or [])
    history = sorted(merged.items())
    return RunSummary(
        steps_completed=len(records),
        problems_consumed=sum(len(r.batch) for r in records),
        selected=[r.selected for r in records],
        level_distribution=_fractions([str(s.level) for s in chosen], [str(k) for k in range(1, 6)]),
        level_groups=_fractions([level_group(s.level) for s in chosen], LEVEL_GROUPS),
        p_s_bands=_fractions([p_s_band(s.p_s) for s in chosen], P_S_BANDS),
        disagreement_bands=_fractions([d_band(s.disagreement) for s in chosen], D_BANDS),
        loss_patterns=_fractions(patterns, [p.value.lower() for p in LossPattern]),
        trajectory=[(int(s), float(a)) for s, a in history] if history else None,
        final_accuracy=float(history[-1][1]) if history else None,
        baseline_accuracy=next((float(a) for s, a in history if s == 0), None),
    )


# ------------------------------------------------------------ persistence

ARTIFACTS = {
    "config": "config.json",
    "events": "events.jsonl",
    "trajectory": "trajectory.csv",
    "summary": "summary.json",
}


def config_hash(resolved: dict) -> str:
    return hashlib.sha256(json.dumps(resolved, sort_keys=True).encode("utf-8")).hexdigest()


@dataclass(frozen=True)
class RunManifest:
    run_id: str
    created_at: str
    config_hash: str
    artifact_paths: dict[str, str]

    def to_json(self) -> dict:
        return asdict(self)


def _timestamp() -> str:
    # SOURCE_DATE_EPOCH pins the timestamp for byte-stable manifests
    epoch = os.environ.get("SOURCE_DATE_EPOCH")
    t = int(epoch) if epoch else int(time.time())
    return time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime(t))


class RunWriter:
    """Streams events and writes the final artifacts of one run directory."""

    def __init__(self, run_dir: str | Path, resolved_config: dict):
        self.dir = Path(run_dir)
        self.dir.mkdir(parents=True, exist_ok=True)
        self.resolved = resolved_config
        (self.dir / ARTIFACTS["config"]).write_text(json.dumps(resolved_config, indent=2, sort_keys=True) + "\n")
        self._events = open(self.dir / ARTIFACTS["events"], "w", encoding="utf-8")

    def emit(self, event: dict) -> None:
        self._events.write(json.dumps(event, sort_keys=True) + "\n")
        self._events.flush()

    def finish(self, summary: RunSummary) -> RunManifest:
        self._events.close()
        with open(self.dir / ARTIFACTS["trajectory"], "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["step", "accuracy"])
            for step, acc in summary.trajectory or []:
                w.writerow([step, repr(acc)])
        (self.dir / ARTIFACTS["summary"]).write_text(summary.dumps())
        digest = config_hash(self.resolved)
        manifest = RunManifest(f"run-{digest[:12]}", _timestamp(), digest, dict(ARTIFACTS))
        (self.dir / "manifest.json").write_text(json.dumps(manifest.to_json(), indent=2, sort_keys=True) + "\n")
        return manifest


def load_events(run_dir: str | Path) -> tuple[list[StepRecord], list[tuple[int, float]]]:
    """Replay a run log into step records and the evaluation history."""
    records: list[StepRecord] = []
    history: list[tuple[int, float]] = []
    with open(Path(run_dir) / ARTIFACTS["events"], encoding="utf-8") as fh:
        for line in fh:
            if not line.strip():
                continue
            event = json.loads(line)
            kind = event.get("event")
            if kind == "step":
                record = StepRecord.from_json(event)
                records.append(record)
                if record.eval_accuracy is not None:
                    history.append((record.step, record.eval_accuracy))
            elif kind == "eval":
                history.append((int(event["step"]), float(event["accuracy"])))
    return records, history


# --------------------------------------------------------------------- run

def run_curriculum(
    dataset: Sequence[Problem],
    backend: PolicyBackend,
    config: CurriculumConfig,
    run_dir: str | Path | None = None,
    resolved_config: dict | None = None,
) -> RunSummary:
    """Baseline evaluation, then ``total_steps`` curriculum steps.

    With ``run_dir`` set, events stream to disk and the summary artifacts are
    written even when a step fails (the exception still propagates).
    """
    writer = RunWriter(run_dir, resolved_config or {"curriculum": config.to_json()}) if run_dir is not None else None
    emit = writer.emit if writer is not None else None
    pool, testset = init_pool(dataset, config)
    state = RunState(pool, testset)
    try:
        baseline = evaluate_policy(backend, testset, config.max_new_tokens)
        state.eval_history.append((0, baseline))
        if emit:
            emit({"event": "eval", "step": 0, "accuracy": baseline})
        for _ in range(config.total_steps):
            curriculum_step(state, backend, config, emit)
            log.info("step %d: selected %s", state.step, state.records[-1].selected)
    finally:
        summary = summarize_run(state.records, state.eval_history)
        if writer is not None:
            writer.finish(summary)
    return summary
