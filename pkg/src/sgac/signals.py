"""Per-rollout rewards and per-candidate selector signals.

All variances and covariances here are population statistics (divide by K).
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import IO, Iterable, Sequence

from .answer import ExtractedAnswer, ExtractionMethod, VerifyResult, grade

FORMAT_BONUS = 0.5
MAX_REWARD_VARIANCE = 0.5625  # population variance bound for values in [0, 1.5]

SIGNAL_COLUMNS = ("candidate_id", "p_s", "var_r", "disagreement", "level")


@dataclass(frozen=True)
class RewardBreakdown:
    r_correct: float
    r_format: float
    r_total: float

    @classmethod
    def from_verify(cls, verify: VerifyResult) -> "RewardBreakdown":
        r_correct = 1.0 if verify.correct else 0.0
        r_format = FORMAT_BONUS if verify.format_ok else 0.0
        return cls(r_correct, r_format, r_correct + r_format)


@dataclass(frozen=True)
class RolloutRecord:
    rollout_index: int
    response: str
    answer: ExtractedAnswer
    verify: VerifyResult
    reward: RewardBreakdown
    seed: int = 0

    @classmethod
    def grade(cls, rollout_index: int, response: str, ground_truth: str, seed: int = 0) -> "RolloutRecord":
        answer, verify = grade(response, ground_truth)
        return cls(rollout_index, response, answer, verify, RewardBreakdown.from_verify(verify), seed)

    def to_json(self) -> dict:
        return {
            "rollout_index": self.rollout_index,
            "seed": self.seed,
            "answer": self.answer.normalized,
            "method": self.answer.method.value,
            "correct": self.verify.correct,
            "match_stage": self.verify.match_stage.value,
            "format_ok": self.verify.format_ok,
            "reward": self.reward.r_total,
        }


@dataclass(frozen=True)
class SignalVector:
    p_s: float
    var_r: float
    disagreement: float
    level: int

    def as_row(self) -> list[float]:
        return [self.p_s, self.var_r, self.disagreement, float(self.level)]

    def to_json(self) -> dict:
        return {"p_s": self.p_s, "var_r": self.var_r, "disagreement": self.disagreement, "level": self.level}

    @classmethod
    def from_json(cls, d: dict) -> "SignalVector":
        return cls(float(d["p_s"]), float(d["var_r"]), float(d["disagreement"]), int(d["level"]))


def score_rollout(response: str, ground_truth: str) -> RewardBreakdown:
    return RewardBreakdown.from_verify(grade(response, ground_truth)[1])


def _require(rollouts: Sequence) -> int:
    if len(rollouts) == 0:
        raise ValueError("at least one rollout is required")
    return len(rollouts)


def _pvar(xs: Sequence[float]) -> float:
    m = math.fsum(xs) / len(xs)
    return math.fsum((x - m) ** 2 for x in xs) / len(xs)


def _pcov(xs: Sequence[float], ys: Sequence[float]) -> float:
    mx = math.fsum(xs) / len(xs)
    my = math.fsum(ys) / len(ys)
    return math.fsum((x - mx) * (y - my) for x, y in zip(xs, ys)) / len(xs)


def success_probability(rollouts: Sequence[RolloutRecord]) -> float:
    k = _require(rollouts)
    return sum(1 for r in rollouts if r.verify.correct) / k


def reward_variance(rollouts: Sequence[RolloutRecord]) -> float:
    _require(rollouts)
    return _pvar([r.reward.r_total for r in rollouts])


def disagreement(rollouts: Sequence[RolloutRecord]) -> float:
    """Unique normalized answers over K; each unextractable rollout is its own value."""
    k = _require(rollouts)
    seen = set()
    for i, r in enumerate(rollouts):
        if r.answer.method is ExtractionMethod.NONE:
            seen.add(("<no-answer>", i))
        else:
            seen.add(r.answer.normalized)
    return len(seen) / k


def variance_decomposition(rollouts: Sequence[RolloutRecord]) -> tuple[float, float, float]:
    """(var of correctness reward, var of format reward, their covariance)."""
    _require(rollouts)
    correct = [r.reward.r_correct for r in rollouts]
    fmt = [r.reward.r_format for r in rollouts]
    return _pvar(correct), _pvar(fmt), _pcov(correct, fmt)


def collect_signals(problem, rollouts: Sequence[RolloutRecord]) -> SignalVector:
    return SignalVector(
        p_s=success_probability(rollouts),
        var_r=reward_variance(rollouts),
        disagreement=disagreement(rollouts),
        level=int(problem.level),
    )


def write_signals_csv(rows: Iterable[tuple[str, SignalVector]], fh: IO[str]) -> None:
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(SIGNAL_COLUMNS)
    for candidate_id, s in rows:
        writer.writerow([candidate_id, repr(s.p_s), repr(s.var_r), repr(s.disagreement), s.level])


def read_signals_csv(fh: IO[str]) -> list[tuple[str, SignalVector]]:
    out = []
    for row in csv.DictReader(fh):
        out.append((row["candidate_id"], SignalVector.from_json(row)))
    return out
