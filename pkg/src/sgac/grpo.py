"""Group-relative advantages, the fixed-length training burst, loss patterns."""

from __future__ import annotations

import enum
import math
from dataclasses import asdict, dataclass, field
from typing import Callable, Optional, Sequence

from .backend import BackendError, ContractViolation, PolicyBackend, exclusive, generate_rollouts
from .data import Problem
from .seeding import derive_seed

DEFAULT_EPSILON = 1e-4


@dataclass(frozen=True)
class AdvantageGroup:
    rewards: tuple[float, ...]
    mean: float
    std: float
    epsilon: float
    advantages: tuple[float, ...]


def group_advantages(rewards: Sequence[float], epsilon: float = DEFAULT_EPSILON) -> AdvantageGroup:
    """(r - mean) / (population std + epsilon) for each reward in the group."""
    if len(rewards) < 2:
        raise ContractViolation(f"a group needs at least 2 rewards, got {len(rewards)}")
    if not epsilon > 0:
        raise ContractViolation(f"epsilon must be positive, got {epsilon}")
    rs = tuple(float(r) for r in rewards)
    g = len(rs)
    if min(rs) == max(rs):
        # exact zeros; a float mean of equal values can drift by an ulp
        mean, std = rs[0], 0.0
    else:
        mean = math.fsum(rs) / g
        std = math.sqrt(math.fsum((r - mean) ** 2 for r in rs) / g)
    return AdvantageGroup(rs, mean, std, epsilon, tuple((r - mean) / (std + epsilon) for r in rs))


class LossPattern(str, enum.Enum):
    ACTIVE = "Active"
    ZERO = "Zero"
    TRANSITION = "Transition"


def classify_loss_pattern(losses: Sequence[float]) -> LossPattern:
    if len(losses) == 0:
        raise ContractViolation("no losses to classify")
    zeros = sum(1 for x in losses if x == 0)
    if zeros == len(losses):
        return LossPattern.ZERO
    if zeros == 0:
        return LossPattern.ACTIVE
    return LossPattern.TRANSITION


@dataclass(frozen=True)
class BurstConfig:
    group_size: int = 4
    max_steps: int = 5
    learning_rate: float = 2e-5
    temperature: float = 1.0
    max_new_tokens: int = 1024
    epsilon: float = DEFAULT_EPSILON

    def __post_init__(self):
        if self.group_size < 2:
            raise ContractViolation("group_size must be >= 2")
        for name in ("max_steps", "learning_rate", "temperature", "max_new_tokens", "epsilon"):
            if not getattr(self, name) > 0:
                raise ContractViolation(f"{name} must be positive")

    def to_json(self) -> dict:
        return asdict(self)


@dataclass
class BurstStep:
    step: int
    loss: float
    rewards: list[float]
    advantages: list[float]

    def to_json(self) -> dict:
        return asdict(self)


@dataclass
class BurstReport:
    problem_id: str
    step_losses: list[float]
    pattern: Optional[LossPattern]
    rollout_counts: list[int]
    steps: list[BurstStep] = field(default_factory=list)

    def to_json(self) -> dict:
        return {
            "problem_id": self.problem_id,
            "step_losses": list(self.step_losses),
            "pattern": self.pattern.value if self.pattern is not None else None,
            "rollout_counts": list(self.rollout_counts),
            "steps": [s.to_json() for s in self.steps],
        }

    @classmethod
    def from_json(cls, d: dict) -> "BurstReport":
        return cls(
            problem_id=d["problem_id"],
            step_losses=list(d["step_losses"]),
            pattern=LossPattern(d["pattern"]) if d.get("pattern") else None,
            rollout_counts=list(d["rollout_counts"]),
            steps=[BurstStep(**s) for s in d.get("steps", [])],
        )


class BurstAborted(BackendError):
    """A backend failure stopped the burst; ``report`` holds the completed steps."""

    def __init__(self, message: str, report: BurstReport):
        super().__init__(message)
        self.report = report


def micro_burst(
    backend: PolicyBackend,
    problem: Problem,
    config: BurstConfig,
    seed: int = 0,
    on_step: Callable[[BurstStep, BurstReport], None] | None = None,
) -> BurstReport:
    """Run ``config.max_steps`` generate/score/update rounds on one problem.

    Backend state is never reset here; updates accumulate across bursts.
    """
    report = BurstReport(problem.id, [], None, [])
    with exclusive(backend):
        for step in range(config.max_steps):
            try:
                rollouts = generate_rollouts(
                    backend,
                    problem,
                    config.group_size,
                    config.temperature,
                    config.max_new_tokens,
                    derive_seed(seed, "burst-step", step),
                )
                group = group_advantages([r.reward.r_total for r in rollouts], config.epsilon)
                loss = float(backend.apply_update(problem, rollouts, group.advantages, config.learning_rate))
            except BackendError as exc:
                raise BurstAborted(f"burst on {problem.id} failed at step {step}: {exc}", report) from exc
            record = BurstStep(step, loss, list(group.rewards), list(group.advantages))
            report.step_losses.append(loss)
            report.rollout_counts.append(len(rollouts))
            report.steps.append(record)
            if on_step is not None:
                on_step(record, report)
    report.pattern = classify_loss_pattern(report.step_losses)
    return report
