"""The policy interface that rollouts, bursts and evaluation run against.

Backends only produce response text and apply updates. Extraction, grading
and rewards always happen on this side, so every backend is scored the same
way.
"""

from __future__ import annotations

import contextlib
import logging
from dataclasses import dataclass
from typing import ContextManager, Protocol, Sequence, runtime_checkable

from .answer import grade
from .data import Problem
from .seeding import rollout_seed
from .signals import RolloutRecord

log = logging.getLogger(__name__)


class BackendError(RuntimeError):
    """The backend could not serve a request."""


class BackendTransportError(BackendError):
    """Network-level failure; safe to retry."""


class ContractViolation(ValueError):
    """The caller broke a precondition; retrying will not help."""


@dataclass(frozen=True)
class Capabilities:
    supports_update: bool
    deterministic_eval: bool


@runtime_checkable
class PolicyBackend(Protocol):
    capabilities: Capabilities

    def generate(self, problem: Problem, n: int, temperature: float, max_new_tokens: int, seed: int) -> list[str]:
        ...

    def apply_update(
        self,
        problem: Problem,
        rollouts: Sequence[RolloutRecord],
        advantages: Sequence[float],
        learning_rate: float,
    ) -> float:
        ...

    def generate_greedy(self, problems: Sequence[Problem], max_new_tokens: int) -> list[str]:
        ...


def exclusive(backend) -> ContextManager:
    """Exclusive session on the backend if it offers one."""
    hook = getattr(backend, "exclusive", None)
    return hook() if hook is not None else contextlib.nullcontext()


def generate_rollouts(
    backend: PolicyBackend,
    problem: Problem,
    k: int,
    temperature: float,
    max_new_tokens: int,
    seed: int,
) -> list[RolloutRecord]:
    if k < 1:
        raise ContractViolation(f"k must be >= 1, got {k}")
    if temperature < 0:
        raise ContractViolation(f"temperature must be >= 0, got {temperature}")
    responses = backend.generate(problem, k, temperature, max_new_tokens, seed)
    if len(responses) != k:
        raise BackendError(f"backend returned {len(responses)} responses, expected {k}")
    return [
        RolloutRecord.grade(i, text, problem.ground_truth, seed=rollout_seed(seed, i))
        for i, text in enumerate(responses)
    ]


def evaluate_policy(backend: PolicyBackend, testset: Sequence[Problem], max_new_tokens: int = 1024) -> float:
    """Greedy accuracy on ``testset``; a failed problem counts as incorrect."""
    if not testset:
        raise ContractViolation("testset must be non-empty")
    try:
        responses: list[str | None] = list(backend.generate_greedy(testset, max_new_tokens))
        if len(responses) != len(testset):
            raise BackendError("greedy batch returned the wrong number of responses")
    except BackendError as exc:
        log.warning("batched evaluation failed (%s); falling back to per-problem calls", exc)
        responses = []
        for problem in testset:
            try:
                responses.append(backend.generate_greedy([problem], max_new_tokens)[0])
            except (BackendError, IndexError) as inner:
                log.warning("evaluation of %s failed: %s", problem.id, inner)
                responses.append(None)
    correct = sum(
        1 for problem, text in zip(testset, responses) if text is not None and grade(text, problem.ground_truth)[1].correct
    )
    return correct / len(testset)


class ReplayBackend:
    """Serves pre-recorded transcripts stored on each problem; no updates."""

    capabilities = Capabilities(supports_update=False, deterministic_eval=True)

    def generate(self, problem: Problem, n: int, temperature: float, max_new_tokens: int, seed: int) -> list[str]:
        if len(problem.responses) < n:
            raise BackendError(f"{problem.id}: {len(problem.responses)} recorded responses, {n} requested")
        return list(problem.responses[:n])

    def apply_update(self, problem, rollouts, advantages, learning_rate) -> float:
        raise BackendError("replay backend cannot apply updates")

    def generate_greedy(self, problems: Sequence[Problem], max_new_tokens: int) -> list[str]:
        out = []
        for p in problems:
            if not p.responses:
                raise BackendError(f"{p.id}: no recorded responses")
            out.append(p.responses[0])
        return out
